#include "aospr/wrappers.hpp"

#include <cmath>

namespace aospr {

namespace {

class NoDelay : public DelayRule {
 public:
  int delay(EdgeId, int, RngStream&) const override { return 0; }
};

class ConstantDelay : public DelayRule {
 public:
  explicit ConstantDelay(int d) : d_(d) {
    if (d < 0) throw ConfigError("delay: must be nonnegative");
  }
  int delay(EdgeId, int, RngStream&) const override { return d_; }

 private:
  int d_;
};

class PerEdgeDelay : public DelayRule {
 public:
  explicit PerEdgeDelay(std::vector<int> d) : d_(std::move(d)) {
    for (int v : d_) {
      if (v < 0) throw ConfigError("delay: must be nonnegative");
    }
  }
  int delay(EdgeId e, int, RngStream&) const override {
    return d_[static_cast<std::size_t>(e)];
  }

 private:
  std::vector<int> d_;
};

class GeometricDelay : public DelayRule {
 public:
  explicit GeometricDelay(double mean) : mean_(mean) {
    if (mean < 0.0) throw ConfigError("delay: mean must be nonnegative");
  }
  int delay(EdgeId, int, RngStream& rng) const override {
    if (mean_ == 0.0) return 0;
    // Geometric on {0,1,...}: P(d = j) = (1-p)^j p with mean (1-p)/p.
    const double p = 1.0 / (1.0 + mean_);
    const double u = rng.uniform();
    return static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
  }

 private:
  double mean_;
};

}  // namespace

std::unique_ptr<DelayRule> DelayRule::none() { return std::make_unique<NoDelay>(); }
std::unique_ptr<DelayRule> DelayRule::constant(int d) {
  return std::make_unique<ConstantDelay>(d);
}
std::unique_ptr<DelayRule> DelayRule::per_edge(std::vector<int> d) {
  return std::make_unique<PerEdgeDelay>(std::move(d));
}
std::unique_ptr<DelayRule> DelayRule::geometric(double mean) {
  return std::make_unique<GeometricDelay>(mean);
}

DelayedFeedback::DelayedFeedback(Policy& inner, std::unique_ptr<DelayRule> rule,
                                 std::uint64_t delay_seed)
    : inner_(&inner), rule_(std::move(rule)), delay_rng_(delay_seed) {}

SelectResult DelayedFeedback::select(RngStream& rng) {
  ++round_;
  return inner_->select(rng);
}

void DelayedFeedback::observe(const std::vector<Observation>& observations) {
  for (const Observation& obs : observations) {
    const int d = rule_->delay(obs.edge, round_, delay_rng_);
    queue_[round_ + d].push_back(obs);
  }
  deliver_due();
}

void DelayedFeedback::deliver_due() {
  while (!queue_.empty() && queue_.begin()->first <= round_) {
    auto node = queue_.extract(queue_.begin());
    inner_->observe(node.mapped());
  }
}

void DelayedFeedback::finish() { inner_->finish(); }

int DelayedFeedback::pending() const {
  int total = 0;
  for (const auto& [round, items] : queue_) total += static_cast<int>(items.size());
  return total;
}

MiniBatch::MiniBatch(Policy& inner, int batch_size)
    : inner_(&inner), batch_size_(batch_size) {
  if (batch_size < 1) throw ConfigError("minibatch: batch size must be >= 1");
}

SelectResult MiniBatch::select(RngStream& rng) {
  if (filled_ == 0) {
    current_ = inner_->select(rng);
    accum_.clear();
  }
  return current_;
}

void MiniBatch::observe(const std::vector<Observation>& observations) {
  if (accum_.empty()) {
    accum_ = observations;
  } else {
    if (accum_.size() != observations.size()) {
      throw InternalInvariant("minibatch: observation shape changed mid-batch");
    }
    for (std::size_t i = 0; i < accum_.size(); ++i) {
      accum_[i].loss += observations[i].loss;
    }
  }
  if (++filled_ >= batch_size_) flush();
}

void MiniBatch::flush() {
  if (filled_ == 0) return;
  std::vector<Observation> averaged = accum_;
  for (Observation& obs : averaged) obs.loss /= filled_;
  inner_->observe(averaged);
  filled_ = 0;
  accum_.clear();
}

void MiniBatch::finish() {
  flush();
  inner_->finish();
}

}  // namespace aospr
