#include "aospr/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace aospr {

void History::push(const std::vector<EdgeId>& path) {
  window_.push_back(path);
  while (static_cast<int>(window_.size()) > capacity_) window_.pop_front();
}

void check_loss_range(const LossVector& losses) {
  for (std::size_t e = 1; e < losses.size(); ++e) {
    if (!(losses[e] >= 0.0 && losses[e] <= 1.0)) {
      throw OutOfRange("loss outside [0,1] on edge " + std::to_string(e));
    }
  }
}

StochasticSpec StochasticSpec::make(std::vector<double> mu, StochasticKind kind) {
  StochasticSpec spec;
  spec.mu = std::move(mu);
  spec.kind = kind;
  const int n = spec.edge_count();
  if (n < 1) throw ConfigError("stochastic spec: no edges");
  double best = 2.0;
  for (EdgeId e = 1; e <= n; ++e) {
    const double m = spec.mu[static_cast<std::size_t>(e)];
    if (!(m >= 0.0 && m <= 1.0)) {
      throw ConfigError("stochastic spec: mean out of [0,1] on edge " + std::to_string(e));
    }
    if (m < best) {
      best = m;
      spec.best_edge = e;
    }
  }
  spec.gap.assign(static_cast<std::size_t>(n) + 1, 0.0);
  spec.min_gap = 0.0;
  for (EdgeId e = 1; e <= n; ++e) {
    const double g = spec.mu[static_cast<std::size_t>(e)] - best;
    spec.gap[static_cast<std::size_t>(e)] = g;
    if (g > 0.0 && (spec.min_gap == 0.0 || g < spec.min_gap)) spec.min_gap = g;
  }
  return spec;
}

LossVector gen_stochastic(const StochasticSpec& spec, RngStream& rng) {
  const int n = spec.edge_count();
  LossVector losses(static_cast<std::size_t>(n) + 1, 0.0);
  for (EdgeId e = 1; e <= n; ++e) {
    const double m = spec.mu[static_cast<std::size_t>(e)];
    if (spec.kind == StochasticKind::kBernoulli) {
      losses[static_cast<std::size_t>(e)] = rng.bernoulli(m) ? 1.0 : 0.0;
    } else {
      // Uniform on the widest symmetric interval around the mean inside [0,1].
      const double h = std::min(m, 1.0 - m);
      losses[static_cast<std::size_t>(e)] = rng.uniform(m - h, m + h);
    }
  }
  return losses;
}

namespace {

class ConstantSchedule : public ObliviousSchedule {
 public:
  ConstantSchedule(int n, double value) : n_(n), value_(value) {}
  double loss(int, EdgeId) const override { return value_; }
  int edge_count() const override { return n_; }

 private:
  int n_;
  double value_;
};

class AlternatingSchedule : public ObliviousSchedule {
 public:
  explicit AlternatingSchedule(int n) : n_(n) {}
  double loss(int t, EdgeId) const override { return static_cast<double>(t % 2); }
  int edge_count() const override { return n_; }

 private:
  int n_;
};

class PeriodicBlocksSchedule : public ObliviousSchedule {
 public:
  PeriodicBlocksSchedule(int n, int period, int groups, double high, double low)
      : n_(n), period_(period), groups_(groups), high_(high), low_(low) {
    if (period < 1 || groups < 1) throw ConfigError("periodic schedule: bad parameters");
  }
  double loss(int t, EdgeId e) const override {
    const int active = ((t - 1) / period_) % groups_;
    return ((e - 1) % groups_) == active ? high_ : low_;
  }
  int edge_count() const override { return n_; }

 private:
  int n_;
  int period_;
  int groups_;
  double high_, low_;
};

class TableSchedule : public ObliviousSchedule {
 public:
  explicit TableSchedule(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
    if (rows_.empty() || rows_[0].empty()) throw ConfigError("oblivious table: empty");
    for (const auto& row : rows_) {
      if (row.size() != rows_[0].size()) {
        throw ConfigError("oblivious table: ragged rows");
      }
    }
  }
  double loss(int t, EdgeId e) const override {
    if (t < 1 || t > static_cast<int>(rows_.size())) {
      throw OutOfRange("oblivious table: round " + std::to_string(t) +
                       " outside the table");
    }
    return rows_[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(e - 1)];
  }
  int edge_count() const override { return static_cast<int>(rows_[0].size()); }

 private:
  std::vector<std::vector<double>> rows_;
};

}  // namespace

std::unique_ptr<ObliviousSchedule> ObliviousSchedule::constant(int n, double value) {
  return std::make_unique<ConstantSchedule>(n, value);
}

std::unique_ptr<ObliviousSchedule> ObliviousSchedule::alternating(int n) {
  return std::make_unique<AlternatingSchedule>(n);
}

std::unique_ptr<ObliviousSchedule> ObliviousSchedule::periodic_blocks(int n, int period,
                                                                      int groups,
                                                                      double high,
                                                                      double low) {
  return std::make_unique<PeriodicBlocksSchedule>(n, period, groups, high, low);
}

std::unique_ptr<ObliviousSchedule> ObliviousSchedule::random_table(int n, int rounds,
                                                                   std::uint64_t seed,
                                                                   double lo, double hi) {
  RngStream rng(seed);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(rounds));
  for (auto& row : rows) {
    row.resize(static_cast<std::size_t>(n));
    for (double& v : row) v = rng.uniform(lo, hi);
  }
  return std::make_unique<TableSchedule>(std::move(rows));
}

std::unique_ptr<ObliviousSchedule> ObliviousSchedule::from_table(
    std::vector<std::vector<double>> rows) {
  return std::make_unique<TableSchedule>(std::move(rows));
}

std::unique_ptr<ObliviousSchedule> ObliviousSchedule::from_csv(const std::string& file,
                                                               int n) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open oblivious table: " + file);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != n) {
      throw ConfigError("oblivious table " + file + ": row has " +
                        std::to_string(row.size()) + " columns, expected " +
                        std::to_string(n));
    }
    rows.push_back(std::move(row));
  }
  return from_table(std::move(rows));
}

LossVector gen_oblivious(const ObliviousSchedule& schedule, int t) {
  const int n = schedule.edge_count();
  LossVector losses(static_cast<std::size_t>(n) + 1, 0.0);
  for (EdgeId e = 1; e <= n; ++e) {
    losses[static_cast<std::size_t>(e)] = schedule.loss(t, e);
  }
  check_loss_range(losses);
  return losses;
}

LossVector gen_adaptive(const AdaptiveAttacker& attacker, const History& window, int n) {
  if (attacker.rule) return attacker.rule(window, n);
  LossVector losses(static_cast<std::size_t>(n) + 1, attacker.baseline_loss);
  losses[0] = 0.0;
  if (window.size() == 0) return losses;
  // Modal path of the window; ties go to the lexicographically smallest.
  std::map<std::vector<EdgeId>, int> counts;
  for (int i = 0; i < window.size(); ++i) ++counts[window.entry(i)];
  const std::vector<EdgeId>* modal = nullptr;
  int best = 0;
  for (const auto& [path, c] : counts) {
    if (c > best) {
      best = c;
      modal = &path;
    }
  }
  for (EdgeId e : *modal) losses[static_cast<std::size_t>(e)] = attacker.attack_loss;
  return losses;
}

LossVector gen_mixed(const MixedSpec& spec, int t, const History& window, RngStream& rng) {
  LossVector losses = gen_stochastic(spec.stochastic, rng);
  const int n = spec.stochastic.edge_count();
  LossVector adversarial;
  if (spec.oblivious) {
    adversarial = gen_oblivious(*spec.oblivious, t);
  } else if (spec.adaptive.has_value()) {
    adversarial = gen_adaptive(*spec.adaptive, window, n);
  } else {
    throw ConfigError("mixed spec: no adversary configured");
  }
  for (EdgeId e : spec.attacked) {
    losses[static_cast<std::size_t>(e)] = adversarial[static_cast<std::size_t>(e)];
  }
  return losses;
}

void ContaminatedSpec::validate_budget() const {
  const int n = base_.edge_count();
  for (EdgeId e = 1; e <= n; ++e) {
    const double rate = (base_.gap[static_cast<std::size_t>(e)] > 0.0
                             ? base_.gap[static_cast<std::size_t>(e)]
                             : base_.min_gap) *
                        zeta_;
    const auto& rounds = rounds_per_edge_[static_cast<std::size_t>(e)];
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      const int t = rounds[i];
      if (t <= onset_) {
        throw BudgetViolation("contamination before onset on edge " + std::to_string(e));
      }
      // Count at time t is i+1; the budget must hold there and at every
      // later t, and t*rate is nondecreasing, so the check at t suffices.
      if (static_cast<double>(i + 1) > static_cast<double>(t) * rate) {
        throw BudgetViolation("contamination budget exceeded on edge " +
                              std::to_string(e) + " at round " + std::to_string(t));
      }
    }
  }
}

ContaminatedSpec ContaminatedSpec::make(StochasticSpec base, double zeta, int onset,
                                        int until, double density) {
  if (!(zeta >= 0.0 && zeta < 0.5)) {
    throw ConfigError("contaminated spec: zeta must be in [0, 1/2)");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw ConfigError("contaminated spec: density must be in (0,1]");
  }
  ContaminatedSpec spec;
  spec.base_ = std::move(base);
  spec.zeta_ = zeta;
  spec.onset_ = onset;
  const int n = spec.base_.edge_count();
  spec.rounds_per_edge_.assign(static_cast<std::size_t>(n) + 1, {});
  if (zeta > 0.0 && until != 0 && until <= onset) {
    throw ConfigError("contaminated spec: until must exceed onset");
  }
  // Greedy placement: contaminate (t,e) whenever the budget admits one more
  // location at t; the budget t*rate is nondecreasing, so admissibility at t
  // implies it at every later round. Placement uses rate*density, validation
  // the full rate.
  constexpr int kDefaultCap = 1 << 20;  // covers any practical horizon
  const int last = until == 0 ? kDefaultCap : until;
  for (EdgeId e = 1; e <= n; ++e) {
    const double gap = spec.base_.gap[static_cast<std::size_t>(e)];
    const double rate = (gap > 0.0 ? gap : spec.base_.min_gap) * zeta * density;
    if (rate <= 0.0) continue;
    auto& rounds = spec.rounds_per_edge_[static_cast<std::size_t>(e)];
    int count = 0;
    for (int t = onset + 1; t <= last; ++t) {
      if (static_cast<double>(count + 1) <= static_cast<double>(t) * rate) {
        rounds.push_back(t);
        ++count;
      }
    }
  }
  spec.validate_budget();
  return spec;
}

ContaminatedSpec ContaminatedSpec::with_locations(
    StochasticSpec base, double zeta, int onset,
    std::vector<std::vector<int>> rounds_per_edge) {
  if (!(zeta >= 0.0 && zeta < 0.5)) {
    throw ConfigError("contaminated spec: zeta must be in [0, 1/2)");
  }
  ContaminatedSpec spec;
  spec.base_ = std::move(base);
  spec.zeta_ = zeta;
  spec.onset_ = onset;
  spec.rounds_per_edge_ = std::move(rounds_per_edge);
  spec.rounds_per_edge_.resize(static_cast<std::size_t>(spec.base_.edge_count()) + 1);
  for (auto& rounds : spec.rounds_per_edge_) std::sort(rounds.begin(), rounds.end());
  spec.validate_budget();
  return spec;
}

bool ContaminatedSpec::contaminated_at(int t, EdgeId e) const {
  const auto& rounds = rounds_per_edge_[static_cast<std::size_t>(e)];
  return std::binary_search(rounds.begin(), rounds.end(), t);
}

int ContaminatedSpec::locations_up_to(int t, EdgeId e) const {
  const auto& rounds = rounds_per_edge_[static_cast<std::size_t>(e)];
  return static_cast<int>(std::upper_bound(rounds.begin(), rounds.end(), t) -
                          rounds.begin());
}

LossVector gen_contaminated(const ContaminatedSpec& spec, int t, RngStream& rng) {
  LossVector losses = gen_stochastic(spec.base(), rng);
  const int n = spec.base().edge_count();
  for (EdgeId e = 1; e <= n; ++e) {
    if (spec.contaminated_at(t, e)) {
      losses[static_cast<std::size_t>(e)] = 1.0 - losses[static_cast<std::size_t>(e)];
    }
  }
  return losses;
}

namespace {

class StochasticModel : public LossModel {
 public:
  explicit StochasticModel(StochasticSpec spec) : spec_(std::move(spec)) {}
  int edge_count() const override { return spec_.edge_count(); }
  Regime regime() const override { return Regime::kStochastic; }
  LossVector losses(int, const History&, RngStream& rng) const override {
    return gen_stochastic(spec_, rng);
  }

 private:
  StochasticSpec spec_;
};

class ObliviousModel : public LossModel {
 public:
  explicit ObliviousModel(std::shared_ptr<ObliviousSchedule> schedule)
      : schedule_(std::move(schedule)) {}
  int edge_count() const override { return schedule_->edge_count(); }
  Regime regime() const override { return Regime::kOblivious; }
  LossVector losses(int t, const History&, RngStream&) const override {
    return gen_oblivious(*schedule_, t);
  }

 private:
  std::shared_ptr<ObliviousSchedule> schedule_;
};

class AdaptiveModel : public LossModel {
 public:
  AdaptiveModel(AdaptiveAttacker attacker, int n) : attacker_(std::move(attacker)), n_(n) {}
  int edge_count() const override { return n_; }
  Regime regime() const override { return Regime::kAdaptive; }
  int history_window() const override { return attacker_.window_size(); }
  LossVector losses(int, const History& history, RngStream&) const override {
    LossVector out = gen_adaptive(attacker_, history, n_);
    check_loss_range(out);
    return out;
  }

 private:
  AdaptiveAttacker attacker_;
  int n_;
};

class MixedModel : public LossModel {
 public:
  explicit MixedModel(MixedSpec spec) : spec_(std::move(spec)) {}
  int edge_count() const override { return spec_.stochastic.edge_count(); }
  Regime regime() const override { return Regime::kMixed; }
  int history_window() const override {
    return spec_.adaptive.has_value() ? spec_.adaptive->window_size() : 0;
  }
  LossVector losses(int t, const History& history, RngStream& rng) const override {
    LossVector out = gen_mixed(spec_, t, history, rng);
    check_loss_range(out);
    return out;
  }

 private:
  MixedSpec spec_;
};

class ContaminatedModel : public LossModel {
 public:
  explicit ContaminatedModel(ContaminatedSpec spec) : spec_(std::move(spec)) {}
  int edge_count() const override { return spec_.base().edge_count(); }
  Regime regime() const override { return Regime::kContaminated; }
  LossVector losses(int t, const History&, RngStream& rng) const override {
    return gen_contaminated(spec_, t, rng);
  }

 private:
  ContaminatedSpec spec_;
};

}  // namespace

std::unique_ptr<LossModel> make_stochastic_model(StochasticSpec spec) {
  return std::make_unique<StochasticModel>(std::move(spec));
}
std::unique_ptr<LossModel> make_oblivious_model(std::shared_ptr<ObliviousSchedule> schedule) {
  return std::make_unique<ObliviousModel>(std::move(schedule));
}
std::unique_ptr<LossModel> make_adaptive_model(AdaptiveAttacker attacker, int n) {
  return std::make_unique<AdaptiveModel>(std::move(attacker), n);
}
std::unique_ptr<LossModel> make_mixed_model(MixedSpec spec) {
  return std::make_unique<MixedModel>(std::move(spec));
}
std::unique_ptr<LossModel> make_contaminated_model(ContaminatedSpec spec) {
  return std::make_unique<ContaminatedModel>(std::move(spec));
}

}  // namespace aospr
