#include "aospr/policy.hpp"

#include <algorithm>
#include <cmath>

namespace aospr {

double beta_schedule(double t, int n) {
  if (!(t >= 1.0) || n < 2) throw InternalInvariant("beta: need t >= 1, n >= 2");
  return 0.5 * std::sqrt(std::log(static_cast<double>(n)) /
                         (static_cast<double>(t) * n));
}

double Schedules::eta(double t, int n) const {
  if (eta_fixed) return eta_value;
  return beta_schedule(t, n);
}

double xi_schedule(const Schedules& s, double t, EdgeId e, const PolicyState& state) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  switch (s.variant) {
    case Schedules::Variant::kZero:
      return 0.0;
    case Schedules::Variant::kKnownGap: {
      const double gap = s.known_gaps[static_cast<std::size_t>(e)];
      const double x = t * gap * gap;
      if (x <= 0.0) return 0.0;
      return std::max(0.0, s.c * std::log(x) / x);
    }
    case Schedules::Variant::kEmpiricalAvg: {
      const double gap = state.gap_estimate(e);
      if (gap <= 0.0) return kInf;
      const double lt = std::log(t);
      return s.c * lt * lt / (t * gap * gap);
    }
    case Schedules::Variant::kPaperSim: {
      const double gap = state.gap_estimate(e);
      if (gap <= 0.0) return kInf;
      const double x = t * gap * gap;
      return std::max(0.0, std::log(x) / (32.0 * x));
    }
  }
  throw InternalInvariant("xi: unknown variant");
}

double exploration_rate(const Schedules& s, double t, EdgeId e, const PolicyState& state) {
  const int n = state.edge_count();
  const double cap = 1.0 / (2.0 * n);
  return std::min({cap, beta_schedule(t, n), xi_schedule(s, t, e, state)});
}

PolicyState::PolicyState(int n)
    : n_(n),
      cum_loss_(static_cast<std::size_t>(n) + 1, 0.0),
      plays_(static_cast<std::size_t>(n) + 1, 0),
      gap_(static_cast<std::size_t>(n) + 1, 0.0) {
  if (n < 2) throw ConfigError("policy state: need at least 2 edges");
}

void PolicyState::record_play(const std::vector<EdgeId>& edges) {
  for (EdgeId e : edges) ++plays_[static_cast<std::size_t>(e)];
}

void PolicyState::add_estimated_loss(EdgeId e, double value) {
  if (value < 0.0) throw InternalInvariant("estimated loss must be nonnegative");
  cum_loss_[static_cast<std::size_t>(e)] += value;
}

void PolicyState::refresh_gaps() {
  if (t_ < 1) return;
  double lo = cum_loss_[1];
  for (EdgeId e = 2; e <= n_; ++e) {
    lo = std::min(lo, cum_loss_[static_cast<std::size_t>(e)]);
  }
  for (EdgeId e = 1; e <= n_; ++e) {
    gap_[static_cast<std::size_t>(e)] =
        std::min(1.0, (cum_loss_[static_cast<std::size_t>(e)] - lo) / t_);
  }
}

bool PolicyState::operator==(const PolicyState& other) const {
  return n_ == other.n_ && t_ == other.t_ && cum_loss_ == other.cum_loss_ &&
         plays_ == other.plays_ && gap_ == other.gap_;
}

std::vector<double> estimate_losses(const std::vector<EdgeId>& chosen,
                                    const std::vector<double>& observed,
                                    const std::vector<double>& marginals) {
  std::vector<double> est(marginals.size(), 0.0);
  for (EdgeId e : chosen) {
    const double q = marginals[static_cast<std::size_t>(e)];
    if (!(q > 0.0)) {
      throw DivisionByZero("zero marginal on chosen edge " + std::to_string(e) +
                           " (covering invariant broken)");
    }
    est[static_cast<std::size_t>(e)] = observed[static_cast<std::size_t>(e)] / q;
  }
  return est;
}

EnumeratedSpace::EnumeratedSpace(const PathSet& paths, const CoveringSet& cover)
    : paths_(&paths), cover_(&cover) {}

std::vector<double> EnumeratedSpace::distribution(const std::vector<double>& log_w,
                                                  const CoverMix& mix) const {
  const int count = paths_->size();
  std::vector<double> log_pw(static_cast<std::size_t>(count), 0.0);
  double hi = kNegInf;
  for (int i = 0; i < count; ++i) {
    double acc = 0.0;
    for (EdgeId e : paths_->path(i).edges()) acc += log_w[static_cast<std::size_t>(e)];
    log_pw[static_cast<std::size_t>(i)] = acc;
    hi = std::max(hi, acc);
  }
  if (hi == kNegInf) throw NumericUnderflow("path distribution: all weights vanished");
  double total = 0.0;
  std::vector<double> rho(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i) {
    rho[static_cast<std::size_t>(i)] = std::exp(log_pw[static_cast<std::size_t>(i)] - hi);
    total += rho[static_cast<std::size_t>(i)];
  }
  const double scale = (1.0 - mix.total_mass) / total;
  for (double& p : rho) p *= scale;
  for (std::size_t pos = 0; pos < mix.strategies.size(); ++pos) {
    const int idx = cover_->members()[pos];
    rho[static_cast<std::size_t>(idx)] += mix.mass[pos];
  }
  return rho;
}

std::vector<EdgeId> EnumeratedSpace::sample(const std::vector<double>& log_w,
                                            const CoverMix& mix, RngStream& rng,
                                            int* index) const {
  const std::vector<double> rho = distribution(log_w, mix);
  const int i = rng.categorical(rho);
  if (index != nullptr) *index = i;
  return paths_->path(i).edges();
}

std::vector<double> EnumeratedSpace::marginals(const std::vector<double>& log_w,
                                               const CoverMix& mix) const {
  const std::vector<double> rho = distribution(log_w, mix);
  std::vector<double> out(static_cast<std::size_t>(paths_->edge_count()) + 1, 0.0);
  for (int i = 0; i < paths_->size(); ++i) {
    for (EdgeId e : paths_->path(i).edges()) {
      out[static_cast<std::size_t>(e)] += rho[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

KSubsetSpace::KSubsetSpace(int n, int k) : n_(n), k_(k) {
  if (k < 1 || k > n) throw ConfigError("subset space: k outside [1, n]");
  designated_pos_.assign(static_cast<std::size_t>(n) + 1, -1);
  // Consecutive blocks of k edges; the last block is right-aligned so every
  // strategy has exactly k members. ceil(n/k) strategies.
  for (int start = 1; start <= n; start += k) {
    const int lo = std::min(start, n - k + 1);
    std::vector<EdgeId> block;
    block.reserve(static_cast<std::size_t>(k));
    for (int e = lo; e < lo + k; ++e) block.push_back(e);
    const int pos = static_cast<int>(cover_.size());
    cover_.push_back(std::move(block));
    for (int e = start; e < std::min(start + k, n + 1); ++e) {
      designated_pos_[static_cast<std::size_t>(e)] = pos;
    }
  }
}

CoverMix KSubsetSpace::cover_mix(const std::vector<double>& eps) const {
  return CoverMix::build(cover_, designated_pos_, eps, n_);
}

std::vector<EdgeId> KSubsetSpace::sample(const std::vector<double>& log_w,
                                         const CoverMix& mix, RngStream& rng,
                                         int* index) const {
  if (index != nullptr) *index = -1;
  const DpTables tables = DpTables::from_log_weights(log_w, k_);
  return sample_subset(tables, mix, rng);
}

std::vector<double> KSubsetSpace::marginals(const std::vector<double>& log_w,
                                            const CoverMix& mix) const {
  const DpTables tables = DpTables::from_log_weights(log_w, k_);
  std::vector<double> out(static_cast<std::size_t>(n_) + 1, 0.0);
  for (EdgeId e = 1; e <= n_; ++e) out[static_cast<std::size_t>(e)] =
      subset_marginal(tables, e, mix);
  return out;
}

std::vector<std::vector<EdgeId>> dag_cover_paths(const Dag& dag) {
  const int n = dag.edge_count();
  std::vector<char> covered(static_cast<std::size_t>(n) + 1, 0);
  std::vector<std::vector<EdgeId>> cover;
  int remaining = n;
  const auto& topo = dag.topo_order();
  while (remaining > 0) {
    // value(v) = max uncovered edges on a v->d path; lexicographic ties.
    std::vector<int> value(static_cast<std::size_t>(dag.vertex_count()), -1);
    std::vector<EdgeId> take(static_cast<std::size_t>(dag.vertex_count()), 0);
    value[static_cast<std::size_t>(dag.destination())] = 0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      const int v = *it;
      if (v == dag.destination()) continue;
      for (EdgeId e : dag.out_edges(v)) {
        const int u = dag.edge(e).to;
        if (value[static_cast<std::size_t>(u)] < 0) continue;
        const int cand = value[static_cast<std::size_t>(u)] +
                         (covered[static_cast<std::size_t>(e)] ? 0 : 1);
        if (cand > value[static_cast<std::size_t>(v)]) {
          value[static_cast<std::size_t>(v)] = cand;
          take[static_cast<std::size_t>(v)] = e;
        }
      }
    }
    std::vector<EdgeId> path;
    for (int v = dag.source(); v != dag.destination();) {
      const EdgeId e = take[static_cast<std::size_t>(v)];
      if (e == 0) throw InternalInvariant("dag cover: dead end");
      path.push_back(e);
      v = dag.edge(e).to;
    }
    for (EdgeId e : path) {
      if (!covered[static_cast<std::size_t>(e)]) {
        covered[static_cast<std::size_t>(e)] = 1;
        --remaining;
      }
    }
    cover.push_back(std::move(path));
  }
  return cover;
}

DagSpace::DagSpace(const Dag& dag) : dag_(&dag), cover_(dag_cover_paths(dag)) {
  designated_pos_.assign(static_cast<std::size_t>(dag.edge_count()) + 1, -1);
  for (std::size_t pos = 0; pos < cover_.size(); ++pos) {
    for (EdgeId e : cover_[pos]) {
      if (designated_pos_[static_cast<std::size_t>(e)] < 0) {
        designated_pos_[static_cast<std::size_t>(e)] = static_cast<int>(pos);
      }
    }
  }
}

DagSpace::DagSpace(const Dag& dag, std::vector<std::vector<EdgeId>> cover_strategies,
                   std::vector<int> designated_pos)
    : dag_(&dag),
      cover_(std::move(cover_strategies)),
      designated_pos_(std::move(designated_pos)) {}

std::vector<EdgeId> DagSpace::sample(const std::vector<double>& log_w,
                                     const CoverMix& mix, RngStream& rng,
                                     int* index) const {
  if (index != nullptr) *index = -1;
  const DagSampler sampler(*dag_, log_w);
  return sample_dag_path(sampler, mix, rng);
}

std::vector<double> DagSpace::marginals(const std::vector<double>& log_w,
                                        const CoverMix& mix) const {
  const DagSampler sampler(*dag_, log_w);
  std::vector<double> out(static_cast<std::size_t>(dag_->edge_count()) + 1, 0.0);
  for (EdgeId e = 1; e <= dag_->edge_count(); ++e) {
    out[static_cast<std::size_t>(e)] = dag_marginal(sampler, e, mix);
  }
  return out;
}

AosprPolicy::AosprPolicy(const StrategySpace& space, Schedules schedules,
                         ProbeSettings probe)
    : space_(&space),
      schedules_(std::move(schedules)),
      probe_(probe),
      state_(space.edge_count()) {
  if (schedules_.variant == Schedules::Variant::kKnownGap &&
      static_cast<int>(schedules_.known_gaps.size()) != space.edge_count() + 1) {
    throw ConfigError("schedules: known_gaps must have one entry per edge");
  }
  if (probe_.budget > 1 && space.strategy_count() < 0) {
    throw ConfigError("probing requires an enumerable path space");
  }
  if (probe_.budget > 1 && probe_.budget > space.strategy_count()) {
    throw BudgetTooLarge("probe budget exceeds the number of paths");
  }
  if (schedules_.eta_fixed && !(schedules_.eta_value > 0.0)) {
    throw ConfigError("schedules: fixed eta must be positive");
  }
}

AosprPolicy::RoundContext AosprPolicy::make_context(int t) const {
  const int n = space_->edge_count();
  RoundContext ctx;
  ctx.eps.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (EdgeId e = 1; e <= n; ++e) {
    const double rate = exploration_rate(schedules_, t, e, state_);
    ctx.eps[static_cast<std::size_t>(e)] = rate;
    ctx.sum_eps += rate;
  }
  if (ctx.sum_eps > 0.5 + 1e-12) {
    throw InternalInvariant("exploration mass exceeds 1/2");
  }
  const double eta = schedules_.eta(t, n);
  ctx.log_w.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (EdgeId e = 1; e <= n; ++e) {
    ctx.log_w[static_cast<std::size_t>(e)] = -eta * state_.cum_loss(e);
  }
  if (const auto* enumerated = dynamic_cast<const EnumeratedSpace*>(space_)) {
    ctx.mix = enumerated->cover_mix(ctx.eps);
  } else if (const auto* subset = dynamic_cast<const KSubsetSpace*>(space_)) {
    ctx.mix = subset->cover_mix(ctx.eps);
  } else if (const auto* dagspace = dynamic_cast<const DagSpace*>(space_)) {
    ctx.mix = dagspace->cover_mix(ctx.eps);
  } else {
    ctx.mix = CoverMix::none(n);
  }
  return ctx;
}

std::vector<double> AosprPolicy::next_marginals() const {
  const RoundContext ctx = make_context(state_.round() + 1);
  return space_->marginals(ctx.log_w, ctx.mix);
}

std::vector<double> AosprPolicy::next_distribution() const {
  const auto* enumerated = dynamic_cast<const EnumeratedSpace*>(space_);
  if (enumerated == nullptr) {
    throw InternalInvariant("distribution requires an enumerable space");
  }
  const RoundContext ctx = make_context(state_.round() + 1);
  return enumerated->distribution(ctx.log_w, ctx.mix);
}

SelectResult AosprPolicy::select(RngStream& rng) {
  state_.begin_round();
  const int t = state_.round();
  const RoundContext ctx = make_context(t);
  const int n = space_->edge_count();

  SelectResult sel;
  sel.t = t;
  sel.sum_eps = ctx.sum_eps;

  const auto* enumerated = dynamic_cast<const EnumeratedSpace*>(space_);
  std::vector<double> rho;  // over paths, enumerable mode only
  std::vector<double> rho_tilde;
  if (enumerated != nullptr) {
    rho = enumerated->distribution(ctx.log_w, ctx.mix);
    sel.chosen_index = rng.categorical(rho);
    sel.chosen = enumerated->paths().path(sel.chosen_index).edges();
    sel.chosen_prob = rho[static_cast<std::size_t>(sel.chosen_index)];
    rho_tilde.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < enumerated->paths().size(); ++i) {
      for (EdgeId e : enumerated->paths().path(i).edges()) {
        rho_tilde[static_cast<std::size_t>(e)] += rho[static_cast<std::size_t>(i)];
      }
    }
  } else {
    sel.chosen = space_->sample(ctx.log_w, ctx.mix, rng, &sel.chosen_index);
    rho_tilde = space_->marginals(ctx.log_w, ctx.mix);
  }
  state_.record_play(sel.chosen);
  sel.divisor.assign(static_cast<std::size_t>(n) + 1, 0.0);

  if (probe_.budget <= 1 && probe_.m_delta == 0.0 && probe_.n_delta == 0.0) {
    // Semi-bandit feedback on the chosen path only; divisors are the plain
    // link marginals.
    sel.probed_edges = sel.chosen;
    std::sort(sel.probed_edges.begin(), sel.probed_edges.end());
    for (EdgeId e : sel.probed_edges) {
      const double q = rho_tilde[static_cast<std::size_t>(e)];
      if (!(q > 0.0)) {
        throw DivisionByZero("zero marginal on chosen edge " + std::to_string(e));
      }
      sel.divisor[static_cast<std::size_t>(e)] = q;
    }
    if (sel.chosen_index >= 0) {
      sel.probed_paths = {sel.chosen_index};
      sel.probed_path_probs = {sel.chosen_prob};
    }
    return sel;
  }

  if (enumerated == nullptr) {
    throw ConfigError("probing requires an enumerable path space");
  }
  const ProbePlan plan =
      make_probe_plan(sel.chosen_index, enumerated->paths(), probe_.budget, rng);
  sel.probed_paths = plan.probed_paths;
  sel.probed_edges = plan.probed_edges;

  double m_eff = 0.0;
  switch (probe_.m_source) {
    case ProbeSettings::MSource::kPaths:
      m_eff = static_cast<double>(plan.budget);
      break;
    case ProbeSettings::MSource::kEdges:
      m_eff = static_cast<double>(plan.probed_edge_count);
      break;
    case ProbeSettings::MSource::kConstant:
      m_eff = probe_.m_constant;
      break;
  }
  m_eff += probe_.m_delta;
  const double n_eff = static_cast<double>(n) + probe_.n_delta;
  for (EdgeId e : sel.probed_edges) {
    const double base = rho_tilde[static_cast<std::size_t>(e)];
    if (!(base > 0.0)) {
      throw DivisionByZero("zero marginal on probed edge " + std::to_string(e));
    }
    sel.divisor[static_cast<std::size_t>(e)] = probed_link_prob(base, m_eff, n_eff);
  }

  // Path-level observation probabilities, diagnostics only.
  sel.probed_path_probs.reserve(sel.probed_paths.size());
  for (int i : sel.probed_paths) {
    sel.probed_path_probs.push_back(probed_path_prob(
        rho[static_cast<std::size_t>(i)], static_cast<double>(plan.budget),
        static_cast<double>(enumerated->paths().size())));
  }
  return sel;
}

void AosprPolicy::observe(const std::vector<Observation>& observations) {
  for (const Observation& obs : observations) {
    if (!(obs.divisor > 0.0)) {
      throw DivisionByZero("observation with non-positive divisor");
    }
    state_.add_estimated_loss(obs.edge, obs.loss / obs.divisor);
  }
  state_.refresh_gaps();
}

double policy_step(Policy& policy, const std::vector<double>& full_losses,
                   RngStream& rng, SelectResult* result) {
  const SelectResult sel = policy.select(rng);
  std::vector<Observation> observations;
  observations.reserve(sel.probed_edges.size());
  for (EdgeId e : sel.probed_edges) {
    Observation obs;
    obs.edge = e;
    obs.loss = full_losses[static_cast<std::size_t>(e)];
    obs.divisor = sel.divisor[static_cast<std::size_t>(e)];
    obs.strategy = sel.chosen_index;
    observations.push_back(obs);
  }
  policy.observe(observations);
  double realized = 0.0;
  for (EdgeId e : sel.chosen) realized += full_losses[static_cast<std::size_t>(e)];
  if (result != nullptr) *result = sel;
  return realized;
}

}  // namespace aospr
