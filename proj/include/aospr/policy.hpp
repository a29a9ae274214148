#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aospr/graph.hpp"
#include "aospr/probing.hpp"
#include "aospr/rng.hpp"
#include "aospr/sampler.hpp"

namespace aospr {

// Learning-rate and exploration schedules. The per-edge exploration rate is
// min{1/(2n), beta_t, xi_t(e)}; xi is the regime-detecting knob.
struct Schedules {
  enum class Variant { kKnownGap, kEmpiricalAvg, kPaperSim, kZero };

  Variant variant = Variant::kEmpiricalAvg;
  double c = 18.0;
  std::vector<double> known_gaps;  // size n+1, kKnownGap only

  bool eta_fixed = false;
  double eta_value = 0.0;

  double eta(double t, int n) const;
};

// beta_t = (1/2) sqrt(ln n / (t n)).
double beta_schedule(double t, int n);

class PolicyState;

// Variant value, floored at 0; +inf when the empirical gap is 0 (saturated
// downstream by the min with 1/(2n) and beta).
double xi_schedule(const Schedules& s, double t, EdgeId e, const PolicyState& state);

// epsilon_t(e) = min{1/(2n), beta_t, xi_t(e)}.
double exploration_rate(const Schedules& s, double t, EdgeId e, const PolicyState& state);

// Cumulative estimated losses, play counts, empirical gaps, round counter.
class PolicyState {
 public:
  explicit PolicyState(int n);

  int edge_count() const { return n_; }
  int round() const { return t_; }
  double cum_loss(EdgeId e) const { return cum_loss_[static_cast<std::size_t>(e)]; }
  const std::vector<double>& cum_losses() const { return cum_loss_; }
  long long play_count(EdgeId e) const { return plays_[static_cast<std::size_t>(e)]; }
  double gap_estimate(EdgeId e) const { return gap_[static_cast<std::size_t>(e)]; }

  void begin_round() { ++t_; }
  void record_play(const std::vector<EdgeId>& edges);
  void add_estimated_loss(EdgeId e, double value);
  // Empirical gap: min{1, (cum_loss(e) - min_e' cum_loss(e')) / t}, the
  // minimizing edge (lowest id on ties) pinned to 0.
  void refresh_gaps();

  bool operator==(const PolicyState& other) const;

 private:
  int n_ = 0;
  int t_ = 0;
  std::vector<double> cum_loss_;
  std::vector<long long> plays_;
  std::vector<double> gap_;
};

// ell~(e) = loss(e)/marginal(e) on the chosen path, 0 elsewhere.
std::vector<double> estimate_losses(const std::vector<EdgeId>& chosen,
                                    const std::vector<double>& observed,
                                    const std::vector<double>& marginals);

// Strategy space abstraction: sampling and marginals under the mixture of
// exponential weights (log_w = -eta * cum_loss) and the covering mixture.
class StrategySpace {
 public:
  virtual ~StrategySpace() = default;
  virtual int edge_count() const = 0;
  // Number of strategies when enumerable, -1 otherwise.
  virtual int strategy_count() const { return -1; }
  virtual std::vector<EdgeId> sample(const std::vector<double>& log_w,
                                     const CoverMix& mix, RngStream& rng,
                                     int* index = nullptr) const = 0;
  // rho~ per edge, size n+1.
  virtual std::vector<double> marginals(const std::vector<double>& log_w,
                                        const CoverMix& mix) const = 0;
};

// Explicit paths; exposes the full distribution.
class EnumeratedSpace : public StrategySpace {
 public:
  EnumeratedSpace(const PathSet& paths, const CoveringSet& cover);

  int edge_count() const override { return paths_->edge_count(); }
  int strategy_count() const override { return paths_->size(); }
  const PathSet& paths() const { return *paths_; }
  const CoveringSet& cover() const { return *cover_; }

  // rho over paths: (1 - sum eps) * softmax + designated covering mass.
  std::vector<double> distribution(const std::vector<double>& log_w,
                                   const CoverMix& mix) const;
  std::vector<EdgeId> sample(const std::vector<double>& log_w, const CoverMix& mix,
                             RngStream& rng, int* index) const override;
  std::vector<double> marginals(const std::vector<double>& log_w,
                                const CoverMix& mix) const override;
  CoverMix cover_mix(const std::vector<double>& eps) const {
    return CoverMix::from_covering(*cover_, *paths_, eps);
  }

 private:
  const PathSet* paths_;
  const CoveringSet* cover_;
};

// All k-subsets of {1..n} in increasing index order, via the DP tables.
class KSubsetSpace : public StrategySpace {
 public:
  // Covering strategies default to consecutive blocks of k edges (the last
  // block right-aligned when k does not divide n).
  KSubsetSpace(int n, int k);

  int edge_count() const override { return n_; }
  int subset_size() const { return k_; }
  std::vector<EdgeId> sample(const std::vector<double>& log_w, const CoverMix& mix,
                             RngStream& rng, int* index) const override;
  std::vector<double> marginals(const std::vector<double>& log_w,
                                const CoverMix& mix) const override;
  CoverMix cover_mix(const std::vector<double>& eps) const;
  const std::vector<std::vector<EdgeId>>& cover_strategies() const { return cover_; }

 private:
  int n_ = 0;
  int k_ = 0;
  std::vector<std::vector<EdgeId>> cover_;
  std::vector<int> designated_pos_;  // size n+1
};

// Topology-constrained sampling by weight pushing over the DAG. Covering
// strategies are built without path enumeration: repeatedly take the s->d
// path through the most yet-uncovered edges.
class DagSpace : public StrategySpace {
 public:
  explicit DagSpace(const Dag& dag);
  DagSpace(const Dag& dag, std::vector<std::vector<EdgeId>> cover_strategies,
           std::vector<int> designated_pos);

  int edge_count() const override { return dag_->edge_count(); }
  std::vector<EdgeId> sample(const std::vector<double>& log_w, const CoverMix& mix,
                             RngStream& rng, int* index) const override;
  std::vector<double> marginals(const std::vector<double>& log_w,
                                const CoverMix& mix) const override;
  CoverMix cover_mix(const std::vector<double>& eps) const {
    return CoverMix::build(cover_, designated_pos_, eps, dag_->edge_count());
  }
  const std::vector<std::vector<EdgeId>>& cover_strategies() const { return cover_; }

 private:
  const Dag* dag_;
  std::vector<std::vector<EdgeId>> cover_;
  std::vector<int> designated_pos_;
};

// Greedy path cover of the DAG: each round the path with the most uncovered
// edges (max-count DP over the topological order, lexicographic ties).
std::vector<std::vector<EdgeId>> dag_cover_paths(const Dag& dag);

// One observed edge with the importance-weight divisor captured at emission
// time; strategy carries the chosen path index on enumerable spaces.
struct Observation {
  EdgeId edge = 0;
  double loss = 0.0;
  double divisor = 1.0;
  int strategy = -1;
};

// One round's selection: the played path, the probe set, and the divisors
// q(e) the estimates will divide by.
struct SelectResult {
  int t = 0;
  std::vector<EdgeId> chosen;
  int chosen_index = -1;
  std::vector<EdgeId> probed_edges;        // ascending, contains chosen's edges
  std::vector<double> divisor;             // size n+1, 0 where unobserved
  std::vector<int> probed_paths;           // enumerable spaces only
  std::vector<double> probed_path_probs;   // parallel diagnostics
  double chosen_prob = 0.0;                // strategy-level probability
  double sum_eps = 0.0;
};

// Round-based agent interface shared by the adaptive policy, the baselines
// and the wrappers.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual int edge_count() const = 0;
  virtual SelectResult select(RngStream& rng) = 0;
  virtual void observe(const std::vector<Observation>& observations) = 0;
  // Flush any buffered feedback at the end of a run.
  virtual void finish() {}
};

// How the probing count entering the link-probability mixture is measured.
struct ProbeSettings {
  int budget = 1;  // M_t
  enum class MSource { kPaths, kEdges, kConstant };
  MSource m_source = MSource::kPaths;
  double m_constant = 1.0;
  double m_delta = 0.0;  // count perturbations injected into the mixture
  double n_delta = 0.0;
};

// The adaptive exponential-weights routing policy over a strategy space.
class AosprPolicy : public Policy {
 public:
  AosprPolicy(const StrategySpace& space, Schedules schedules,
              ProbeSettings probe = {});

  std::string name() const override { return "aospr"; }
  int edge_count() const override { return space_->edge_count(); }
  const PolicyState& state() const { return state_; }
  PolicyState& state() { return state_; }

  // Distribution/marginal snapshot for the next round (diagnostics, tests).
  std::vector<double> next_marginals() const;
  std::vector<double> next_distribution() const;  // enumerable spaces only

  SelectResult select(RngStream& rng) override;
  void observe(const std::vector<Observation>& observations) override;

 private:
  struct RoundContext {
    std::vector<double> eps;
    double sum_eps = 0.0;
    std::vector<double> log_w;
    CoverMix mix;
  };
  RoundContext make_context(int t) const;

  const StrategySpace* space_;
  Schedules schedules_;
  ProbeSettings probe_;
  PolicyState state_;
};

// Convenience one-round step: select from the policy, query the loss oracle
// on the probed edges only, feed the policy. Returns realized path loss.
double policy_step(Policy& policy, const std::vector<double>& full_losses,
                   RngStream& rng, SelectResult* result = nullptr);

}  // namespace aospr
