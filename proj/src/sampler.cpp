#include "aospr/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace aospr {

CoverMix CoverMix::build(const std::vector<std::vector<EdgeId>>& strategies,
                         const std::vector<int>& designated_pos,
                         const std::vector<double>& eps, int n) {
  CoverMix mix;
  mix.strategies = strategies;
  mix.designated_pos_ = designated_pos;
  mix.mass.assign(strategies.size(), 0.0);
  mix.containing.assign(static_cast<std::size_t>(n) + 1, {});
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    for (EdgeId e : strategies[i]) {
      mix.containing[static_cast<std::size_t>(e)].push_back(static_cast<int>(i));
    }
  }
  for (EdgeId e = 1; e <= n; ++e) {
    const double rate = eps[static_cast<std::size_t>(e)];
    if (rate < 0.0) throw InternalInvariant("cover mix: negative exploration rate");
    const int pos = designated_pos[static_cast<std::size_t>(e)];
    if (rate > 0.0) {
      if (pos < 0 || pos >= static_cast<int>(strategies.size())) {
        throw InternalInvariant("cover mix: edge lacks a designated strategy");
      }
      mix.mass[static_cast<std::size_t>(pos)] += rate;
      mix.total_mass += rate;
    }
  }
  if (mix.total_mass > 1.0) {
    throw InternalInvariant("cover mix: exploration mass exceeds 1");
  }
  return mix;
}

CoverMix CoverMix::from_covering(const CoveringSet& cover, const PathSet& paths,
                                 const std::vector<double>& eps) {
  std::vector<std::vector<EdgeId>> strategies;
  strategies.reserve(cover.members().size());
  for (int idx : cover.members()) strategies.push_back(paths.path(idx).edges());
  std::vector<int> designated_pos(static_cast<std::size_t>(paths.edge_count()) + 1, -1);
  for (EdgeId e = 1; e <= paths.edge_count(); ++e) {
    designated_pos[static_cast<std::size_t>(e)] =
        cover.member_pos(cover.designated_cover(e));
  }
  return build(strategies, designated_pos, eps, paths.edge_count());
}

CoverMix CoverMix::none(int n) {
  CoverMix mix;
  mix.containing.assign(static_cast<std::size_t>(n) + 1, {});
  mix.designated_pos_.assign(static_cast<std::size_t>(n) + 1, -1);
  return mix;
}

double CoverMix::marginal_mass(EdgeId e) const {
  double total = 0.0;
  for (int i : containing[static_cast<std::size_t>(e)]) {
    total += mass[static_cast<std::size_t>(i)];
  }
  return total;
}

double CoverMix::designated_mass(EdgeId e) const {
  const int pos = designated_pos_[static_cast<std::size_t>(e)];
  return pos < 0 ? 0.0 : mass[static_cast<std::size_t>(pos)];
}

int CoverMix::sample(RngStream& rng) const {
  const double u = rng.uniform() * total_mass;
  double acc = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    acc += mass[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = mass.size(); i-- > 0;) {
    if (mass[i] > 0.0) return static_cast<int>(i);
  }
  throw InternalInvariant("cover mix: sample with zero total mass");
}

DpTables DpTables::from_log_weights(const std::vector<double>& log_w, int k) {
  const int n = static_cast<int>(log_w.size()) - 1;
  if (k < 0 || k > n) throw InternalInvariant("dp tables: k out of range");
  for (EdgeId e = 1; e <= n; ++e) {
    if (std::isnan(log_w[static_cast<std::size_t>(e)]) ||
        log_w[static_cast<std::size_t>(e)] == std::numeric_limits<double>::infinity()) {
      throw NumericOverflow("dp tables: invalid log-weight");
    }
  }
  DpTables t;
  t.n_ = n;
  t.k_ = k;
  t.log_w_ = log_w;
  // suffix(e, j): rows e = 1..n+1; suffix(e, 0) = 1, suffix(n+1, j>=1) = 0.
  t.suffix_.assign(static_cast<std::size_t>(n + 2) * (k + 1), kNegInf);
  t.prefix_.assign(static_cast<std::size_t>(n + 1) * (k + 1), kNegInf);
  auto suf = [&](int e, int j) -> double& {
    return t.suffix_[static_cast<std::size_t>(e) * (k + 1) + j];
  };
  auto pre = [&](int e, int j) -> double& {
    return t.prefix_[static_cast<std::size_t>(e) * (k + 1) + j];
  };
  for (int e = 1; e <= n + 1; ++e) suf(e, 0) = 0.0;
  for (int e = n; e >= 1; --e) {
    for (int j = 1; j <= k; ++j) {
      suf(e, j) = log_sum_exp(suf(e + 1, j),
                              log_w[static_cast<std::size_t>(e)] + suf(e + 1, j - 1));
    }
  }
  for (int e = 0; e <= n; ++e) pre(e, 0) = 0.0;
  for (int e = 1; e <= n; ++e) {
    for (int j = 1; j <= k; ++j) {
      pre(e, j) = log_sum_exp(pre(e - 1, j),
                              log_w[static_cast<std::size_t>(e)] + pre(e - 1, j - 1));
    }
  }
  return t;
}

DpTables DpTables::from_weights(const std::vector<double>& w, int k) {
  std::vector<double> log_w(w.size(), kNegInf);
  for (std::size_t e = 1; e < w.size(); ++e) {
    if (!(w[e] > 0.0) || !std::isfinite(w[e])) {
      throw InternalInvariant("dp tables: weights must be positive and finite");
    }
    log_w[e] = std::log(w[e]);
  }
  return from_log_weights(log_w, k);
}

double DpTables::log_suffix(int e, int j) const {
  if (e < 1 || e > n_ + 1 || j < 0 || j > k_) {
    throw InternalInvariant("dp tables: suffix index out of range");
  }
  return suffix_[static_cast<std::size_t>(e) * (k_ + 1) + j];
}

double DpTables::log_prefix(int e, int j) const {
  if (e < 0 || e > n_ || j < 0 || j > k_) {
    throw InternalInvariant("dp tables: prefix index out of range");
  }
  return prefix_[static_cast<std::size_t>(e) * (k_ + 1) + j];
}

std::vector<EdgeId> DpTables::sample(RngStream& rng, double* log_prob) const {
  std::vector<EdgeId> subset;
  subset.reserve(static_cast<std::size_t>(k_));
  double acc = 0.0;
  int picked = 0;
  for (EdgeId e = 1; e <= n_ && picked < k_; ++e) {
    const int need = k_ - picked;
    const double log_take =
        log_w_[static_cast<std::size_t>(e)] + log_suffix(e + 1, need - 1);
    const double log_all = log_suffix(e, need);
    const double p_take = std::exp(log_take - log_all);
    // Forced picks at the tail (remaining edges == needed) give p_take = 1.
    if (rng.uniform() < p_take) {
      subset.push_back(e);
      ++picked;
      acc += log_take - log_all;
    } else {
      acc += log_suffix(e + 1, need) - log_all;
    }
  }
  if (picked != k_) {
    throw InternalInvariant("subset sample: scan ended short of k picks");
  }
  if (log_prob != nullptr) *log_prob = acc;
  return subset;
}

double DpTables::log_subset_prob(const std::vector<EdgeId>& subset) const {
  if (static_cast<int>(subset.size()) != k_) {
    throw InternalInvariant("subset prob: wrong subset size");
  }
  double acc = 0.0;
  for (EdgeId e : subset) acc += log_w_[static_cast<std::size_t>(e)];
  return acc - log_total();
}

double DpTables::exp_marginal(EdgeId e) const {
  if (e < 1 || e > n_) throw InternalInvariant("marginal: edge out of range");
  double log_num = kNegInf;
  for (int j = 0; j <= k_ - 1; ++j) {
    log_num = log_sum_exp(log_num, log_prefix(e - 1, j) +
                                        log_w_[static_cast<std::size_t>(e)] +
                                        log_suffix(e + 1, k_ - j - 1));
  }
  return std::exp(log_num - log_total());
}

double subset_marginal(const DpTables& tables, EdgeId e, const CoverMix& mix) {
  return (1.0 - mix.total_mass) * tables.exp_marginal(e) + mix.marginal_mass(e);
}

std::vector<EdgeId> sample_subset(const DpTables& tables, const CoverMix& mix,
                                  RngStream& rng) {
  if (mix.total_mass > 0.0 && rng.uniform() < mix.total_mass) {
    return mix.strategies[static_cast<std::size_t>(mix.sample(rng))];
  }
  return tables.sample(rng);
}

DagSampler::DagSampler(const Dag& dag, const std::vector<double>& log_w)
    : dag_(&dag), log_w_(log_w) {
  const int vcount = dag.vertex_count();
  log_backward_.assign(static_cast<std::size_t>(vcount), kNegInf);
  log_forward_.assign(static_cast<std::size_t>(vcount), kNegInf);
  log_backward_[static_cast<std::size_t>(dag.destination())] = 0.0;
  const auto& topo = dag.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if (*it == dag.destination()) continue;
    double acc = kNegInf;
    for (EdgeId e : dag.out_edges(*it)) {
      acc = log_sum_exp(acc, log_w_[static_cast<std::size_t>(e)] +
                                 log_backward_[static_cast<std::size_t>(dag.edge(e).to)]);
    }
    log_backward_[static_cast<std::size_t>(*it)] = acc;
  }
  log_forward_[static_cast<std::size_t>(dag.source())] = 0.0;
  for (int v : topo) {
    if (log_forward_[static_cast<std::size_t>(v)] == kNegInf) continue;
    for (EdgeId e : dag.out_edges(v)) {
      const int u = dag.edge(e).to;
      log_forward_[static_cast<std::size_t>(u)] =
          log_sum_exp(log_forward_[static_cast<std::size_t>(u)],
                      log_forward_[static_cast<std::size_t>(v)] +
                          log_w_[static_cast<std::size_t>(e)]);
    }
  }
  if (log_total() == kNegInf) {
    throw NumericUnderflow("dag sampler: total path weight is zero");
  }
}

double DagSampler::log_total() const {
  return log_backward_[static_cast<std::size_t>(dag_->source())];
}

std::vector<EdgeId> DagSampler::sample(RngStream& rng) const {
  std::vector<EdgeId> edges;
  int v = dag_->source();
  while (v != dag_->destination()) {
    const double log_z = log_backward_[static_cast<std::size_t>(v)];
    const double u = rng.uniform();
    double acc = 0.0;
    EdgeId taken = 0;
    const auto& out = dag_->out_edges(v);
    for (EdgeId e : out) {
      const double p =
          std::exp(log_w_[static_cast<std::size_t>(e)] +
                   log_backward_[static_cast<std::size_t>(dag_->edge(e).to)] - log_z);
      acc += p;
      if (u < acc) {
        taken = e;
        break;
      }
    }
    if (taken == 0) {
      // Rounding fallback: last edge with positive continuation.
      for (auto it = out.rbegin(); it != out.rend(); ++it) {
        if (log_backward_[static_cast<std::size_t>(dag_->edge(*it).to)] != kNegInf) {
          taken = *it;
          break;
        }
      }
    }
    if (taken == 0) throw InternalInvariant("dag sample: dead end");
    edges.push_back(taken);
    v = dag_->edge(taken).to;
  }
  return edges;
}

double DagSampler::exp_marginal(EdgeId e) const {
  const Edge& edge = dag_->edge(e);
  const double lf = log_forward_[static_cast<std::size_t>(edge.from)];
  const double lb = log_backward_[static_cast<std::size_t>(edge.to)];
  if (lf == kNegInf || lb == kNegInf) return 0.0;
  return std::exp(lf + log_w_[static_cast<std::size_t>(e)] + lb - log_total());
}

double DagSampler::log_path_prob(const Path& path) const {
  double acc = 0.0;
  for (EdgeId e : path.edges()) acc += log_w_[static_cast<std::size_t>(e)];
  return acc - log_total();
}

std::vector<EdgeId> sample_dag_path(const DagSampler& sampler, const CoverMix& mix,
                                    RngStream& rng) {
  if (mix.total_mass > 0.0 && rng.uniform() < mix.total_mass) {
    return mix.strategies[static_cast<std::size_t>(mix.sample(rng))];
  }
  return sampler.sample(rng);
}

double dag_marginal(const DagSampler& sampler, EdgeId e, const CoverMix& mix) {
  return (1.0 - mix.total_mass) * sampler.exp_marginal(e) + mix.marginal_mass(e);
}

}  // namespace aospr
