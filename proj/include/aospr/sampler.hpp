#pragma once

#include <limits>
#include <vector>

#include "aospr/graph.hpp"
#include "aospr/rng.hpp"

namespace aospr {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// Covering-strategy mixture in per-strategy mass form. Mass of a covering
// strategy is the sum of exploration rates over the edges designated to it,
// which keeps the path distribution normalized even when greedy covers
// overlap (each edge contributes its rate exactly once).
struct CoverMix {
  std::vector<std::vector<EdgeId>> strategies;  // edge lists of the covering paths
  std::vector<double> mass;                     // u(i), parallel to strategies
  double total_mass = 0.0;                      // sum_e eps(e)
  std::vector<std::vector<int>> containing;     // edge -> strategy positions, size n+1

  static CoverMix build(const std::vector<std::vector<EdgeId>>& strategies,
                        const std::vector<int>& designated_pos,
                        const std::vector<double>& eps, int n);
  // Mixture built from a CoveringSet over an enumerated PathSet.
  static CoverMix from_covering(const CoveringSet& cover, const PathSet& paths,
                                const std::vector<double>& eps);
  static CoverMix none(int n);

  // Exact mixture marginal for edge e: sum of mass over strategies containing e.
  double marginal_mass(EdgeId e) const;
  // Mass designated to e's covering strategy (the exploration floor).
  double designated_mass(EdgeId e) const;
  // Draw a covering strategy index proportionally to mass (total_mass > 0).
  int sample(RngStream& rng) const;

 private:
  std::vector<int> designated_pos_;  // size n+1, edge -> strategy position
};

// Suffix/prefix subset-weight tables over edges 1..n for fixed subset size k.
// log_suffix(e,j) = log sum over j-subsets of {e..n} of the weight product;
// log_prefix(e,j) the same over {1..e}. All arithmetic in log domain.
class DpTables {
 public:
  static DpTables from_log_weights(const std::vector<double>& log_w, int k);
  static DpTables from_weights(const std::vector<double>& w, int k);

  int n() const { return n_; }
  int k() const { return k_; }
  double log_weight(EdgeId e) const { return log_w_[static_cast<std::size_t>(e)]; }
  double log_suffix(int e, int j) const;  // 1 <= e <= n+1, 0 <= j <= k
  double log_prefix(int e, int j) const;  // 0 <= e <= n, 0 <= j <= k
  double log_total() const { return log_suffix(1, k_); }

  // Sequential link-by-link scan: with j picked among 1..e-1, edge e is taken
  // with probability w(e) * suffix(e+1, k-j-1) / suffix(e, k-j). Returns the
  // subset ascending; log_prob, when given, receives the accumulated log
  // selection probability (telescopes to log_subset_prob of the result).
  std::vector<EdgeId> sample(RngStream& rng, double* log_prob = nullptr) const;

  // log of the subset probability via the sequential rule's closed form:
  // sum of member log-weights minus log_total.
  double log_subset_prob(const std::vector<EdgeId>& subset) const;

  // Exponential-weights part of the edge marginal:
  // sum_{j=0}^{k-1} prefix(e-1,j) * w(e) * suffix(e+1,k-j-1) / total.
  double exp_marginal(EdgeId e) const;

 private:
  int n_ = 0;
  int k_ = 0;
  std::vector<double> log_w_;       // size n+1
  std::vector<double> suffix_;      // (n+2) x (k+1)
  std::vector<double> prefix_;      // (n+1) x (k+1)
};

// Full per-edge marginal of the mixture distribution over k-subsets:
// (1 - total_mass) * exp_marginal + mixture marginal.
double subset_marginal(const DpTables& tables, EdgeId e, const CoverMix& mix);

// Subset draw from the mixture: with probability total_mass emit a covering
// strategy (proportionally to its mass), otherwise a DP sample.
std::vector<EdgeId> sample_subset(const DpTables& tables, const CoverMix& mix,
                                  RngStream& rng);

// DAG counterpart with the same probability contract: paths are drawn with
// probability (1 - total_mass) * prod w(e) / Z + mixture, where Z sums the
// weight product over all s->d paths. Backward weight pushing; marginals by
// forward-backward products.
class DagSampler {
 public:
  DagSampler(const Dag& dag, const std::vector<double>& log_w);

  double log_total() const;  // log Z
  std::vector<EdgeId> sample(RngStream& rng) const;
  double exp_marginal(EdgeId e) const;
  double log_path_prob(const Path& path) const;

 private:
  const Dag* dag_;
  std::vector<double> log_w_;
  std::vector<double> log_backward_;  // per vertex: log sum over v->d paths
  std::vector<double> log_forward_;   // per vertex: log sum over s->v paths
};

std::vector<EdgeId> sample_dag_path(const DagSampler& sampler, const CoverMix& mix,
                                    RngStream& rng);
double dag_marginal(const DagSampler& sampler, EdgeId e, const CoverMix& mix);

}  // namespace aospr
