#pragma once

#include <map>
#include <memory>
#include <vector>

#include "aospr/policy.hpp"

namespace aospr {

// Nonnegative integer feedback delays per (edge, emission round).
class DelayRule {
 public:
  virtual ~DelayRule() = default;
  virtual int delay(EdgeId e, int t, RngStream& rng) const = 0;

  static std::unique_ptr<DelayRule> none();
  static std::unique_ptr<DelayRule> constant(int d);
  static std::unique_ptr<DelayRule> per_edge(std::vector<int> d);  // size n+1
  // Geometric on {0,1,...} with the given mean.
  static std::unique_ptr<DelayRule> geometric(double mean);
};

// Queues observations at emission and replays them into the inner policy at
// delivery round = emission + delay, in emission order. Importance-weight
// divisors travel with the observation, so late updates use the marginals
// recorded when the path was chosen. Rounds with no deliveries leave the
// inner weights untouched.
class DelayedFeedback : public Policy {
 public:
  DelayedFeedback(Policy& inner, std::unique_ptr<DelayRule> rule, std::uint64_t delay_seed);

  std::string name() const override { return inner_->name() + "+delay"; }
  int edge_count() const override { return inner_->edge_count(); }
  SelectResult select(RngStream& rng) override;
  void observe(const std::vector<Observation>& observations) override;
  void finish() override;  // drains nothing; pending items stay undelivered

  int pending() const;  // queued observations not yet delivered

 private:
  Policy* inner_;
  std::unique_ptr<DelayRule> rule_;
  RngStream delay_rng_;
  int round_ = 0;
  std::map<int, std::vector<Observation>> queue_;  // delivery round -> items
  void deliver_due();
};

// Plays the inner policy's current selection for batch_size consecutive
// rounds and feeds the within-batch average loss back as one inner step.
class MiniBatch : public Policy {
 public:
  MiniBatch(Policy& inner, int batch_size);

  std::string name() const override { return inner_->name() + "+batch"; }
  int edge_count() const override { return inner_->edge_count(); }
  SelectResult select(RngStream& rng) override;
  void observe(const std::vector<Observation>& observations) override;
  void finish() override;  // feeds a trailing partial batch, averaged over it

 private:
  Policy* inner_;
  int batch_size_;
  int filled_ = 0;
  SelectResult current_;
  std::vector<Observation> accum_;  // loss field accumulates sums
  void flush();
};

}  // namespace aospr
