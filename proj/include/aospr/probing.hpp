#pragma once

#include <string>
#include <vector>

#include "aospr/graph.hpp"
#include "aospr/rng.hpp"

namespace aospr {

// One round's multi-path probe: the chosen path plus budget-1 extra paths
// drawn uniformly without replacement from the rest.
struct ProbePlan {
  int budget = 1;                  // M_t
  int chosen = -1;                 // index of H_t in the path set
  std::vector<int> probed_paths;   // O_t, ascending, contains chosen
  std::vector<EdgeId> probed_edges;  // O~_t, ascending
  int probed_edge_count = 0;       // m_t = |O~_t|
};

ProbePlan make_probe_plan(int chosen_index, const PathSet& paths, int budget,
                          RngStream& rng);

// Observation probability of a probed path: rho + (1 - rho)(M-1)/(N-1).
double probed_path_prob(double rho, double budget, double total_paths);

// Observation probability of a probed link: rho~ + (1 - rho~)(m-1)/(n-1).
// ProbabilityOutOfRange unless the result lands in (0,1].
double probed_link_prob(double rho_tilde, double m, double n);

// Batch size for playing through a memory-bounded adaptive adversary:
// ceil((4k sqrt(n ln n))^(-1/3) * horizon^(1/3)), at least 1.
int minibatch_auto_size(int k, int n, long long horizon);

// First round by which every edge has been probed at least once; -1 if the
// trace never covers them all.
int coldstart_monitor(const std::vector<std::vector<EdgeId>>& probed_per_round, int n);

// Uniform probing until first full edge coverage; returns the cover time.
int coldstart_cover_time(const PathSet& paths, int budget, RngStream& rng);

// Multiple source-destination pairs sharing link measurements. cover[s][e]
// marks link e reachable by pair s's paths; subset_size[s] = |E_s|.
struct MultiSourceSpec {
  enum class Mode { kCoordinated, kUncoordinated };

  int pairs = 0;  // S
  int edges = 0;  // n
  Mode mode = Mode::kUncoordinated;
  std::vector<std::vector<char>> cover;  // [pair][edge], edge ids 1..n
  std::vector<int> subset_size;          // k_s

  // InfeasibleCover if some edge is covered by no pair.
  static MultiSourceSpec make(std::vector<std::vector<char>> cover, Mode mode);
  // CSV rows = pairs, columns = edges, cells 0/1.
  static MultiSourceSpec from_csv(const std::string& file, Mode mode);
};

// Feasible round-robin sample count of one link: sum_s floor(t/k_s) * C_es.
long long kappa_edge(const MultiSourceSpec& spec, EdgeId e, long long t);

// Feasible lower bound on the least-probed link's sample count at time t:
// kappa(t) = min_e sum_s floor(t/k_s) * C_es.
long long kappa_lower(const MultiSourceSpec& spec, long long t);

// Effective probing rate: the least-probed link's sample count relative to
// its fastest covering pair probing alone. Equals the pair count S under
// complete overlap and 1 when covers are disjoint.
double kappa_bar(const MultiSourceSpec& spec, long long t);

// Per-round probe assignments, one edge per pair. Coordinated mode greedily
// maximizes fresh coverage within the round; uncoordinated mode round-robins
// each pair over its own subset.
class MultiSourceScheduler {
 public:
  explicit MultiSourceScheduler(MultiSourceSpec spec);
  // Advances one round; element s is the edge probed by pair s.
  std::vector<EdgeId> next_round();
  int round() const { return round_; }
  long long probe_count(EdgeId e) const {
    return counts_[static_cast<std::size_t>(e)];
  }

 private:
  MultiSourceSpec spec_;
  int round_ = 0;
  std::vector<long long> counts_;  // cumulative probes per edge
};

}  // namespace aospr
