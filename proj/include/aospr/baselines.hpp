#pragma once

#include <vector>

#include "aospr/environment.hpp"
#include "aospr/policy.hpp"

namespace aospr {

// Path-level exponential weights with uniform exploration mixing
// gamma_t = min{1, sqrt(N ln N / ((e-1) t))}; no link sharing. Path losses
// are scaled by 1/k internally to stay in [0,1].
class Exp3PathPolicy : public Policy {
 public:
  explicit Exp3PathPolicy(const PathSet& paths);

  std::string name() const override { return "exp3_path"; }
  int edge_count() const override { return paths_->edge_count(); }
  int round() const { return t_; }
  std::vector<double> distribution(int t) const;  // p_t over paths

  SelectResult select(RngStream& rng) override;
  void observe(const std::vector<Observation>& observations) override;

  static double gamma_schedule(int t, int total_paths);

 private:
  const PathSet* paths_;
  int t_ = 0;
  std::vector<double> cum_est_;  // importance-weighted path losses, scaled
};

// Semi-bandit UCB: plays the path minimizing the sum of per-edge lower
// confidence indices mu_hat(e) - sqrt(1.5 ln t / N(e)); paths containing the
// most unobserved edges are forced first, ties to the lowest path index.
class CombUcbPolicy : public Policy {
 public:
  explicit CombUcbPolicy(const PathSet& paths);

  std::string name() const override { return "combucb1"; }
  int edge_count() const override { return paths_->edge_count(); }
  long long observe_count(EdgeId e) const { return counts_[static_cast<std::size_t>(e)]; }
  double mean_estimate(EdgeId e) const { return means_[static_cast<std::size_t>(e)]; }
  int pick_path() const;  // index the next select() will play

  SelectResult select(RngStream& rng) override;
  void observe(const std::vector<Observation>& observations) override;

 private:
  int pick_for(int t) const;
  const PathSet* paths_;
  int t_ = 0;
  std::vector<double> means_;
  std::vector<long long> counts_;
};

// Clairvoyant comparator: the fixed expected-best path in stochastic-like
// regimes, the hindsight-best fixed path on a pre-materialized loss table in
// oblivious regimes.
class OraclePolicy : public Policy {
 public:
  // Stochastic / contaminated: argmin over paths of the expected loss sum.
  static OraclePolicy expected_best(const PathSet& paths, const std::vector<double>& mu);
  // Oblivious (incl. mixed with an oblivious adversary): best fixed path on
  // the realized table over the horizon.
  static OraclePolicy hindsight_best(const PathSet& paths, const LossModel& model,
                                     int horizon, RngStream& env_rng);

  std::string name() const override { return "oracle"; }
  int edge_count() const override { return paths_->edge_count(); }
  int fixed_index() const { return index_; }

  SelectResult select(RngStream& rng) override;
  void observe(const std::vector<Observation>& observations) override;

 private:
  OraclePolicy(const PathSet& paths, int index);
  const PathSet* paths_;
  int index_;
  int t_ = 0;
};

}  // namespace aospr
