#include "aospr/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace aospr {

Exp3PathPolicy::Exp3PathPolicy(const PathSet& paths)
    : paths_(&paths), cum_est_(static_cast<std::size_t>(paths.size()), 0.0) {}

double Exp3PathPolicy::gamma_schedule(int t, int total_paths) {
  const double n = static_cast<double>(total_paths);
  return std::min(1.0, std::sqrt(n * std::log(n) /
                                 ((std::exp(1.0) - 1.0) * static_cast<double>(t))));
}

std::vector<double> Exp3PathPolicy::distribution(int t) const {
  const int count = paths_->size();
  const double gamma = gamma_schedule(t, count);
  const double eta = gamma / count;
  double hi = kNegInf;
  std::vector<double> log_w(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    log_w[static_cast<std::size_t>(i)] = -eta * cum_est_[static_cast<std::size_t>(i)];
    hi = std::max(hi, log_w[static_cast<std::size_t>(i)]);
  }
  double total = 0.0;
  std::vector<double> p(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(log_w[static_cast<std::size_t>(i)] - hi);
    total += p[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < count; ++i) {
    p[static_cast<std::size_t>(i)] =
        (1.0 - gamma) * p[static_cast<std::size_t>(i)] / total + gamma / count;
  }
  return p;
}

SelectResult Exp3PathPolicy::select(RngStream& rng) {
  ++t_;
  const std::vector<double> p = distribution(t_);
  const int i = rng.categorical(p);
  SelectResult sel;
  sel.t = t_;
  sel.chosen_index = i;
  sel.chosen = paths_->path(i).edges();
  sel.chosen_prob = p[static_cast<std::size_t>(i)];
  sel.probed_edges = sel.chosen;
  std::sort(sel.probed_edges.begin(), sel.probed_edges.end());
  sel.divisor.assign(static_cast<std::size_t>(paths_->edge_count()) + 1, 0.0);
  // Per-edge contributions add up to pathloss / (k * p): divisor k*p.
  const double d = static_cast<double>(paths_->max_length()) * sel.chosen_prob;
  for (EdgeId e : sel.probed_edges) sel.divisor[static_cast<std::size_t>(e)] = d;
  sel.probed_paths = {i};
  sel.probed_path_probs = {sel.chosen_prob};
  return sel;
}

void Exp3PathPolicy::observe(const std::vector<Observation>& observations) {
  for (const Observation& obs : observations) {
    if (obs.strategy < 0 || obs.strategy >= paths_->size()) {
      throw InternalInvariant("exp3: observation lacks the chosen path index");
    }
    cum_est_[static_cast<std::size_t>(obs.strategy)] += obs.loss / obs.divisor;
  }
}

CombUcbPolicy::CombUcbPolicy(const PathSet& paths)
    : paths_(&paths),
      means_(static_cast<std::size_t>(paths.edge_count()) + 1, 0.0),
      counts_(static_cast<std::size_t>(paths.edge_count()) + 1, 0) {}

int CombUcbPolicy::pick_path() const { return pick_for(t_ + 1); }

int CombUcbPolicy::pick_for(int t) const {
  const int count = paths_->size();
  const double lt = std::log(static_cast<double>(std::max(1, t)));
  int best = 0;
  int best_unobserved = -1;
  double best_index = 0.0;
  for (int i = 0; i < count; ++i) {
    int unobserved = 0;
    double index = 0.0;
    for (EdgeId e : paths_->path(i).edges()) {
      if (counts_[static_cast<std::size_t>(e)] == 0) {
        ++unobserved;
      } else {
        index += means_[static_cast<std::size_t>(e)] -
                 std::sqrt(1.5 * lt / static_cast<double>(
                                          counts_[static_cast<std::size_t>(e)]));
      }
    }
    // Order: most unobserved edges first, then smallest index, then lowest i.
    const bool better =
        unobserved > best_unobserved ||
        (unobserved == best_unobserved && index < best_index);
    if (i == 0 || better) {
      best = i;
      best_unobserved = unobserved;
      best_index = index;
    }
  }
  return best;
}

SelectResult CombUcbPolicy::select(RngStream&) {
  ++t_;
  const int i = pick_for(t_);
  SelectResult sel;
  sel.t = t_;
  sel.chosen_index = i;
  sel.chosen = paths_->path(i).edges();
  sel.chosen_prob = 1.0;
  sel.probed_edges = sel.chosen;
  std::sort(sel.probed_edges.begin(), sel.probed_edges.end());
  sel.divisor.assign(static_cast<std::size_t>(paths_->edge_count()) + 1, 0.0);
  for (EdgeId e : sel.probed_edges) sel.divisor[static_cast<std::size_t>(e)] = 1.0;
  sel.probed_paths = {i};
  sel.probed_path_probs = {1.0};
  return sel;
}

void CombUcbPolicy::observe(const std::vector<Observation>& observations) {
  for (const Observation& obs : observations) {
    auto& count = counts_[static_cast<std::size_t>(obs.edge)];
    auto& mean = means_[static_cast<std::size_t>(obs.edge)];
    ++count;
    mean += (obs.loss - mean) / static_cast<double>(count);
  }
}

OraclePolicy::OraclePolicy(const PathSet& paths, int index)
    : paths_(&paths), index_(index) {}

OraclePolicy OraclePolicy::expected_best(const PathSet& paths,
                                         const std::vector<double>& mu) {
  int best = 0;
  double best_sum = 0.0;
  for (int i = 0; i < paths.size(); ++i) {
    double sum = 0.0;
    for (EdgeId e : paths.path(i).edges()) sum += mu[static_cast<std::size_t>(e)];
    if (i == 0 || sum < best_sum) {
      best = i;
      best_sum = sum;
    }
  }
  return OraclePolicy(paths, best);
}

OraclePolicy OraclePolicy::hindsight_best(const PathSet& paths, const LossModel& model,
                                          int horizon, RngStream& env_rng) {
  std::vector<double> cum(static_cast<std::size_t>(paths.edge_count()) + 1, 0.0);
  History empty(1);
  for (int t = 1; t <= horizon; ++t) {
    const LossVector losses = model.losses(t, empty, env_rng);
    for (EdgeId e = 1; e <= paths.edge_count(); ++e) {
      cum[static_cast<std::size_t>(e)] += losses[static_cast<std::size_t>(e)];
    }
  }
  int best = 0;
  double best_sum = 0.0;
  for (int i = 0; i < paths.size(); ++i) {
    double sum = 0.0;
    for (EdgeId e : paths.path(i).edges()) sum += cum[static_cast<std::size_t>(e)];
    if (i == 0 || sum < best_sum) {
      best = i;
      best_sum = sum;
    }
  }
  return OraclePolicy(paths, best);
}

SelectResult OraclePolicy::select(RngStream&) {
  ++t_;
  SelectResult sel;
  sel.t = t_;
  sel.chosen_index = index_;
  sel.chosen = paths_->path(index_).edges();
  sel.chosen_prob = 1.0;
  sel.probed_edges = sel.chosen;
  std::sort(sel.probed_edges.begin(), sel.probed_edges.end());
  sel.divisor.assign(static_cast<std::size_t>(paths_->edge_count()) + 1, 0.0);
  for (EdgeId e : sel.probed_edges) sel.divisor[static_cast<std::size_t>(e)] = 1.0;
  sel.probed_paths = {index_};
  sel.probed_path_probs = {1.0};
  return sel;
}

void OraclePolicy::observe(const std::vector<Observation>&) {}

}  // namespace aospr
