#include "aospr/probing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace aospr {

ProbePlan make_probe_plan(int chosen_index, const PathSet& paths, int budget,
                          RngStream& rng) {
  const int total = paths.size();
  if (budget < 1 || budget > total) {
    throw BudgetTooLarge("probe budget " + std::to_string(budget) +
                         " outside [1, " + std::to_string(total) + "]");
  }
  ProbePlan plan;
  plan.budget = budget;
  plan.chosen = chosen_index;
  if (budget == 1) {
    plan.probed_paths = {chosen_index};
  } else {
    // budget-1 uniform draws from the other total-1 indices.
    std::vector<int> extras = rng.sample_without_replacement(0, total - 2, budget - 1);
    plan.probed_paths.reserve(static_cast<std::size_t>(budget));
    plan.probed_paths.push_back(chosen_index);
    for (int x : extras) {
      plan.probed_paths.push_back(x >= chosen_index ? x + 1 : x);
    }
    std::sort(plan.probed_paths.begin(), plan.probed_paths.end());
  }
  std::vector<char> seen(static_cast<std::size_t>(paths.edge_count()) + 1, 0);
  for (int i : plan.probed_paths) {
    for (EdgeId e : paths.path(i).edges()) seen[static_cast<std::size_t>(e)] = 1;
  }
  for (EdgeId e = 1; e <= paths.edge_count(); ++e) {
    if (seen[static_cast<std::size_t>(e)]) plan.probed_edges.push_back(e);
  }
  plan.probed_edge_count = static_cast<int>(plan.probed_edges.size());
  return plan;
}

double probed_path_prob(double rho, double budget, double total_paths) {
  if (total_paths <= 1.0) return 1.0;
  return rho + (1.0 - rho) * (budget - 1.0) / (total_paths - 1.0);
}

double probed_link_prob(double rho_tilde, double m, double n) {
  const double mix = n <= 1.0 ? 0.0 : (m - 1.0) / (n - 1.0);
  const double q = rho_tilde + (1.0 - rho_tilde) * mix;
  if (!(q > 0.0 && q <= 1.0 + 1e-12)) {
    throw ProbabilityOutOfRange("probed link probability " + std::to_string(q) +
                                " outside (0,1]");
  }
  return std::min(q, 1.0);
}

int minibatch_auto_size(int k, int n, long long horizon) {
  if (k < 1 || n < 2 || horizon < 1) {
    throw ConfigError("minibatch size: need k >= 1, n >= 2, horizon >= 1");
  }
  const double base = 4.0 * k * std::sqrt(n * std::log(static_cast<double>(n)));
  const double size = std::pow(base, -1.0 / 3.0) *
                      std::pow(static_cast<double>(horizon), 1.0 / 3.0);
  return std::max(1, static_cast<int>(std::ceil(size)));
}

int coldstart_monitor(const std::vector<std::vector<EdgeId>>& probed_per_round, int n) {
  std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
  int remaining = n;
  for (std::size_t r = 0; r < probed_per_round.size(); ++r) {
    for (EdgeId e : probed_per_round[r]) {
      if (!seen[static_cast<std::size_t>(e)]) {
        seen[static_cast<std::size_t>(e)] = 1;
        if (--remaining == 0) return static_cast<int>(r) + 1;
      }
    }
  }
  return -1;
}

int coldstart_cover_time(const PathSet& paths, int budget, RngStream& rng) {
  const int n = paths.edge_count();
  std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
  int remaining = n;
  for (int round = 1;; ++round) {
    const std::vector<int> probes =
        rng.sample_without_replacement(0, paths.size() - 1, budget);
    for (int i : probes) {
      for (EdgeId e : paths.path(i).edges()) {
        if (!seen[static_cast<std::size_t>(e)]) {
          seen[static_cast<std::size_t>(e)] = 1;
          --remaining;
        }
      }
    }
    if (remaining == 0) return round;
  }
}

MultiSourceSpec MultiSourceSpec::make(std::vector<std::vector<char>> cover, Mode mode) {
  MultiSourceSpec spec;
  spec.mode = mode;
  spec.pairs = static_cast<int>(cover.size());
  if (spec.pairs < 1) throw ConfigError("multisource: no pairs");
  spec.edges = static_cast<int>(cover[0].size()) - 1;
  for (const auto& row : cover) {
    if (static_cast<int>(row.size()) != spec.edges + 1) {
      throw ConfigError("multisource: ragged cover matrix");
    }
  }
  spec.cover = std::move(cover);
  spec.subset_size.assign(static_cast<std::size_t>(spec.pairs), 0);
  for (int s = 0; s < spec.pairs; ++s) {
    for (EdgeId e = 1; e <= spec.edges; ++e) {
      if (spec.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)]) {
        ++spec.subset_size[static_cast<std::size_t>(s)];
      }
    }
    if (spec.subset_size[static_cast<std::size_t>(s)] == 0) {
      throw ConfigError("multisource: pair " + std::to_string(s) + " covers nothing");
    }
  }
  for (EdgeId e = 1; e <= spec.edges; ++e) {
    bool covered = false;
    for (int s = 0; s < spec.pairs; ++s) {
      covered = covered ||
                spec.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)];
    }
    if (!covered) {
      throw InfeasibleCover("multisource: edge " + std::to_string(e) +
                            " covered by no pair");
    }
  }
  return spec;
}

MultiSourceSpec MultiSourceSpec::from_csv(const std::string& file, Mode mode) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open cover matrix: " + file);
  std::vector<std::vector<char>> cover;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<char> row{0};  // slot 0 unused
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::stoi(cell) != 0 ? 1 : 0);
    }
    cover.push_back(std::move(row));
  }
  return make(std::move(cover), mode);
}

long long kappa_edge(const MultiSourceSpec& spec, EdgeId e, long long t) {
  long long total = 0;
  for (int s = 0; s < spec.pairs; ++s) {
    if (spec.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)]) {
      total += t / spec.subset_size[static_cast<std::size_t>(s)];
    }
  }
  return total;
}

long long kappa_lower(const MultiSourceSpec& spec, long long t) {
  long long best = -1;
  for (EdgeId e = 1; e <= spec.edges; ++e) {
    const long long total = kappa_edge(spec, e, t);
    if (best < 0 || total < best) best = total;
  }
  return best;
}

double kappa_bar(const MultiSourceSpec& spec, long long t) {
  double best = -1.0;
  for (EdgeId e = 1; e <= spec.edges; ++e) {
    long long total = 0;
    int fastest = 0;
    for (int s = 0; s < spec.pairs; ++s) {
      if (spec.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)]) {
        const int ks = spec.subset_size[static_cast<std::size_t>(s)];
        total += t / ks;
        if (fastest == 0 || ks < fastest) fastest = ks;
      }
    }
    const long long baseline = t / fastest;
    const double rate = baseline == 0
                            ? (total == 0 ? 1.0 : static_cast<double>(total))
                            : static_cast<double>(total) / static_cast<double>(baseline);
    if (best < 0.0 || rate < best) best = rate;
  }
  return best;
}

MultiSourceScheduler::MultiSourceScheduler(MultiSourceSpec spec) : spec_(std::move(spec)) {
  counts_.assign(static_cast<std::size_t>(spec_.edges) + 1, 0);
}

std::vector<EdgeId> MultiSourceScheduler::next_round() {
  ++round_;
  std::vector<EdgeId> assignment(static_cast<std::size_t>(spec_.pairs), 0);
  std::vector<char> fresh(static_cast<std::size_t>(spec_.edges) + 1, 1);
  for (int s = 0; s < spec_.pairs; ++s) {
    EdgeId pick = 0;
    if (spec_.mode == MultiSourceSpec::Mode::kCoordinated) {
      // First feasible edge not yet probed this round, else least-probed.
      for (EdgeId e = 1; e <= spec_.edges; ++e) {
        if (spec_.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)] &&
            fresh[static_cast<std::size_t>(e)]) {
          if (pick == 0 || counts_[static_cast<std::size_t>(e)] <
                               counts_[static_cast<std::size_t>(pick)]) {
            pick = e;
          }
        }
      }
      if (pick == 0) {
        for (EdgeId e = 1; e <= spec_.edges && pick == 0; ++e) {
          if (spec_.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)]) {
            pick = e;
          }
        }
      }
    } else {
      // Round-robin over the pair's own subset: floor(t/k_s) visits each.
      const int ks = spec_.subset_size[static_cast<std::size_t>(s)];
      int slot = (round_ - 1) % ks;
      for (EdgeId e = 1; e <= spec_.edges; ++e) {
        if (spec_.cover[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)]) {
          if (slot == 0) {
            pick = e;
            break;
          }
          --slot;
        }
      }
    }
    assignment[static_cast<std::size_t>(s)] = pick;
    fresh[static_cast<std::size_t>(pick)] = 0;
    ++counts_[static_cast<std::size_t>(pick)];
  }
  return assignment;
}

}  // namespace aospr
