#include "aospr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace aospr {

namespace {

using Clock = std::chrono::steady_clock;

const json& need(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(ctx + "." + key + ": missing");
  return *it;
}

double as_num(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<int>();
}

std::string as_str(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

int opt_int(const json& j, const char* key, int fallback, const std::string& ctx) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_int(*it, ctx + "." + key);
}

double opt_num(const json& j, const char* key, double fallback, const std::string& ctx) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_num(*it, ctx + "." + key);
}

std::string opt_str(const json& j, const char* key, const std::string& fallback,
                    const std::string& ctx) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_str(*it, ctx + "." + key);
}

bool opt_bool(const json& j, const char* key, bool fallback, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(ctx + "." + key + ": expected a boolean");
  return it->get<bool>();
}

Dag generated_dag(const json& g, const std::string& ctx) {
  const std::string type = as_str(need(g, "generator", ctx), ctx + ".generator");
  std::vector<std::pair<int, int>> edges;
  if (type == "parallel_chains") {
    const int chains = as_int(need(g, "chains", ctx), ctx + ".chains");
    const int length = as_int(need(g, "length", ctx), ctx + ".length");
    if (chains < 2 || length < 1) throw ConfigError(ctx + ": need chains >= 2, length >= 1");
    // s=0, d=1, chain i gets internal vertices; edges emitted chain by chain.
    int next_vertex = 2;
    for (int c = 0; c < chains; ++c) {
      int prev = 0;
      for (int step = 0; step < length - 1; ++step) {
        edges.emplace_back(prev, next_vertex);
        prev = next_vertex++;
      }
      edges.emplace_back(prev, 1);
    }
    return build_dag(edges, 0, 1);
  }
  if (type == "parallel_edges") {
    const int count = as_int(need(g, "count", ctx), ctx + ".count");
    if (count < 2) throw ConfigError(ctx + ".count: need at least 2");
    for (int i = 0; i < count; ++i) edges.emplace_back(0, 1);
    return build_dag(edges, 0, 1);
  }
  if (type == "layered") {
    const json& widths = need(g, "widths", ctx);
    if (!widths.is_array() || widths.empty()) {
      throw ConfigError(ctx + ".widths: expected a nonempty array");
    }
    // Junction vertices 0 = s, L = d; layer i has widths[i] parallel edges.
    const int layers = static_cast<int>(widths.size());
    for (int layer = 0; layer < layers; ++layer) {
      const int w = as_int(widths[static_cast<std::size_t>(layer)],
                           ctx + ".widths[" + std::to_string(layer) + "]");
      if (w < 1) throw ConfigError(ctx + ".widths: entries must be >= 1");
      for (int i = 0; i < w; ++i) edges.emplace_back(layer, layer + 1);
    }
    return build_dag(edges, 0, layers);
  }
  throw ConfigError(ctx + ".generator: unknown type '" + type + "'");
}

Dag dag_from_file(const std::string& file, const std::string& ctx) {
  std::ifstream in(file);
  if (!in) throw ConfigError(ctx + ".file: cannot open '" + file + "'");
  json g;
  in >> g;
  const int vertices = as_int(need(g, "vertices", ctx), ctx + ".vertices");
  const json& edges_json = need(g, "edges", ctx);
  if (!edges_json.is_array()) throw ConfigError(ctx + ".edges: expected an array");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < edges_json.size(); ++i) {
    const json& pair = edges_json[i];
    const std::string p = ctx + ".edges[" + std::to_string(i) + "]";
    if (!pair.is_array() || pair.size() != 2) throw ConfigError(p + ": expected [u, v]");
    edges.emplace_back(as_int(pair[0], p), as_int(pair[1], p));
  }
  const int source = as_int(need(g, "source", ctx), ctx + ".source");
  const int destination = as_int(need(g, "destination", ctx), ctx + ".destination");
  return Dag::build(vertices, edges, source, destination);
}

std::vector<double> parse_means(const json& regime, int n, const std::string& ctx) {
  const json& arr = need(regime, "means", ctx);
  if (!arr.is_array()) throw ConfigError(ctx + ".means: expected an array");
  if (n != 0 && static_cast<int>(arr.size()) != n) {
    throw ConfigError(ctx + ".means: expected " + std::to_string(n) + " entries, got " +
                      std::to_string(arr.size()));
  }
  std::vector<double> mu(arr.size() + 1, 0.0);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const double v = as_num(arr[i], ctx + ".means[" + std::to_string(i) + "]");
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(ctx + ".means[" + std::to_string(i) + "]: outside [0,1]");
    }
    mu[i + 1] = v;
  }
  return mu;
}

StochasticKind parse_loss_kind(const json& regime, const std::string& ctx) {
  const std::string kind = opt_str(regime, "loss_kind", "bernoulli", ctx);
  if (kind == "bernoulli") return StochasticKind::kBernoulli;
  if (kind == "uniform") return StochasticKind::kUniform;
  throw ConfigError(ctx + ".loss_kind: unknown kind '" + kind + "'");
}

std::shared_ptr<ObliviousSchedule> parse_schedule(const json& s, int n,
                                                  const std::string& ctx) {
  const std::string type = as_str(need(s, "type", ctx), ctx + ".type");
  if (type == "constant") {
    return ObliviousSchedule::constant(n, as_num(need(s, "value", ctx), ctx + ".value"));
  }
  if (type == "alternating") return ObliviousSchedule::alternating(n);
  if (type == "periodic_blocks") {
    return ObliviousSchedule::periodic_blocks(
        n, as_int(need(s, "period", ctx), ctx + ".period"),
        as_int(need(s, "groups", ctx), ctx + ".groups"),
        as_num(need(s, "high", ctx), ctx + ".high"),
        as_num(need(s, "low", ctx), ctx + ".low"));
  }
  if (type == "random_table") {
    return ObliviousSchedule::random_table(
        n, as_int(need(s, "rounds", ctx), ctx + ".rounds"),
        static_cast<std::uint64_t>(as_num(need(s, "seed", ctx), ctx + ".seed")),
        opt_num(s, "lo", 0.0, ctx), opt_num(s, "hi", 1.0, ctx));
  }
  if (type == "csv") {
    return ObliviousSchedule::from_csv(as_str(need(s, "file", ctx), ctx + ".file"), n);
  }
  throw ConfigError(ctx + ".type: unknown schedule '" + type + "'");
}

AdaptiveAttacker parse_attacker(const json& a, const std::string& ctx) {
  AdaptiveAttacker attacker;
  attacker.theta = as_int(need(a, "theta", ctx), ctx + ".theta");
  if (attacker.theta < 0) throw ConfigError(ctx + ".theta: must be >= 0");
  attacker.attack_loss = opt_num(a, "attack_loss", 1.0, ctx);
  attacker.baseline_loss = opt_num(a, "baseline_loss", 0.1, ctx);
  return attacker;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  const std::string root = "config";

  cfg.horizon = as_int(need(j, "horizon", root), "horizon");
  if (cfg.horizon < 1) throw ConfigError("horizon: must be >= 1");
  cfg.repetitions = opt_int(j, "repetitions", 1, root);
  if (cfg.repetitions < 1) throw ConfigError("repetitions: must be >= 1");
  cfg.seed = static_cast<std::uint64_t>(opt_num(j, "seed", 1.0, root));
  cfg.path_cap = static_cast<std::uint64_t>(opt_num(j, "path_cap", 4096.0, root));
  cfg.workers = opt_int(j, "workers", 0, root);
  cfg.overlay_bound = opt_bool(j, "bound_overlay", false, root);

  // Policy block first: the space mode decides whether paths get enumerated.
  const json& pol = need(j, "policy", root);
  const std::string ptype = as_str(need(pol, "type", "policy"), "policy.type");
  if (ptype == "aospr") {
    cfg.policy = PolicyKind::kAospr;
  } else if (ptype == "exp3_path") {
    cfg.policy = PolicyKind::kExp3Path;
  } else if (ptype == "combucb1") {
    cfg.policy = PolicyKind::kCombUcb;
  } else if (ptype == "oracle") {
    cfg.policy = PolicyKind::kOracle;
  } else {
    throw ConfigError("policy.type: unknown policy '" + ptype + "'");
  }
  const std::string mode = opt_str(pol, "mode", "enumerate", "policy");
  if (mode == "enumerate") {
    cfg.mode = SpaceMode::kEnumerate;
  } else if (mode == "subset") {
    cfg.mode = SpaceMode::kSubset;
  } else if (mode == "dag") {
    cfg.mode = SpaceMode::kDag;
  } else {
    throw ConfigError("policy.mode: unknown mode '" + mode + "'");
  }
  if (cfg.policy != PolicyKind::kAospr && cfg.mode != SpaceMode::kEnumerate) {
    throw ConfigError("policy.mode: baseline policies require mode 'enumerate'");
  }

  // Graph.
  const auto graph_it = j.find("graph");
  if (graph_it != j.end()) {
    const json& g = *graph_it;
    if (g.contains("file")) {
      cfg.dag = std::make_shared<const Dag>(
          dag_from_file(as_str(g["file"], "graph.file"), "graph"));
    } else {
      cfg.dag = std::make_shared<const Dag>(generated_dag(g, "graph"));
    }
    cfg.edge_count = cfg.dag->edge_count();
  }
  if (cfg.mode == SpaceMode::kSubset) {
    cfg.subset_size = as_int(need(pol, "subset_size", "policy"), "policy.subset_size");
    if (cfg.edge_count == 0) {
      cfg.edge_count = as_int(need(j, "edges", root), "edges");
    }
    if (cfg.subset_size < 1 || cfg.subset_size > cfg.edge_count) {
      throw ConfigError("policy.subset_size: outside [1, edge count]");
    }
  } else if (cfg.dag == nullptr) {
    throw ConfigError("graph: required unless policy.mode is 'subset'");
  }
  if (cfg.edge_count < 2) throw ConfigError("graph: need at least 2 edges");

  const bool needs_paths = cfg.mode == SpaceMode::kEnumerate;
  if (needs_paths) {
    try {
      cfg.paths = std::make_shared<const PathSet>(enumerate_paths(*cfg.dag, cfg.path_cap));
    } catch (const PathExplosion& e) {
      throw ConfigError(std::string("graph: ") + e.what() +
                        " (raise path_cap or use policy.mode subset/dag)");
    }
    cfg.cover = std::make_shared<const CoveringSet>(covering_set(*cfg.paths));
  }

  // Regime.
  const json& regime = need(j, "regime", root);
  const std::string rtype = as_str(need(regime, "type", "regime"), "regime.type");
  const int n = cfg.edge_count;
  if (rtype == "stochastic") {
    cfg.regime = Regime::kStochastic;
    cfg.means = parse_means(regime, n, "regime");
    cfg.model = make_stochastic_model(
        StochasticSpec::make(cfg.means, parse_loss_kind(regime, "regime")));
  } else if (rtype == "oblivious") {
    cfg.regime = Regime::kOblivious;
    cfg.model =
        make_oblivious_model(parse_schedule(need(regime, "schedule", "regime"), n,
                                            "regime.schedule"));
  } else if (rtype == "adaptive") {
    cfg.regime = Regime::kAdaptive;
    cfg.model = make_adaptive_model(parse_attacker(regime, "regime"), n);
  } else if (rtype == "mixed") {
    cfg.regime = Regime::kMixed;
    cfg.means = parse_means(regime, n, "regime");
    MixedSpec spec;
    spec.stochastic = StochasticSpec::make(cfg.means, parse_loss_kind(regime, "regime"));
    const json& attacked = need(regime, "attacked_edges", "regime");
    if (!attacked.is_array()) {
      throw ConfigError("regime.attacked_edges: expected an array");
    }
    for (std::size_t i = 0; i < attacked.size(); ++i) {
      const int e = as_int(attacked[i],
                           "regime.attacked_edges[" + std::to_string(i) + "]");
      if (e < 1 || e > n) {
        throw ConfigError("regime.attacked_edges[" + std::to_string(i) +
                          "]: edge id outside 1.." + std::to_string(n));
      }
      spec.attacked.push_back(e);
    }
    const json& adv = need(regime, "adversary", "regime");
    const std::string atype = as_str(need(adv, "type", "regime.adversary"),
                                     "regime.adversary.type");
    if (atype == "oblivious") {
      spec.oblivious = parse_schedule(need(adv, "schedule", "regime.adversary"), n,
                                      "regime.adversary.schedule");
    } else if (atype == "adaptive") {
      spec.adaptive = parse_attacker(adv, "regime.adversary");
    } else {
      throw ConfigError("regime.adversary.type: unknown adversary '" + atype + "'");
    }
    cfg.model = make_mixed_model(std::move(spec));
  } else if (rtype == "contaminated") {
    cfg.regime = Regime::kContaminated;
    cfg.means = parse_means(regime, n, "regime");
    const double zeta = as_num(need(regime, "zeta", "regime"), "regime.zeta");
    const int onset = as_int(need(regime, "onset", "regime"), "regime.onset");
    const int until = opt_int(regime, "until", 0, "regime");
    const double density = opt_num(regime, "density", 1.0, "regime");
    cfg.model = make_contaminated_model(ContaminatedSpec::make(
        StochasticSpec::make(cfg.means, parse_loss_kind(regime, "regime")), zeta, onset,
        until, density));
  } else {
    throw ConfigError("regime.type: unknown regime '" + rtype + "'");
  }

  // Schedules.
  const auto sched_it = pol.find("schedules");
  if (sched_it != pol.end()) {
    const json& s = *sched_it;
    const std::string variant = opt_str(s, "variant", "empirical_avg", "policy.schedules");
    if (variant == "known_gap") {
      cfg.schedules.variant = Schedules::Variant::kKnownGap;
      if (cfg.means.empty()) {
        throw ConfigError(
            "policy.schedules.variant: known_gap needs a regime with known means");
      }
      StochasticSpec spec = StochasticSpec::make(cfg.means);
      cfg.schedules.known_gaps = spec.gap;
    } else if (variant == "empirical_avg") {
      cfg.schedules.variant = Schedules::Variant::kEmpiricalAvg;
    } else if (variant == "paper_sim") {
      cfg.schedules.variant = Schedules::Variant::kPaperSim;
    } else if (variant == "zero") {
      cfg.schedules.variant = Schedules::Variant::kZero;
    } else {
      throw ConfigError("policy.schedules.variant: unknown variant '" + variant + "'");
    }
    cfg.schedules.c = opt_num(s, "c", 18.0, "policy.schedules");
    if (cfg.schedules.c < 0.0) throw ConfigError("policy.schedules.c: must be >= 0");
    const std::string eta = opt_str(s, "eta_rule", "beta", "policy.schedules");
    if (eta == "beta") {
      cfg.schedules.eta_fixed = false;
    } else if (eta.rfind("fixed:", 0) == 0) {
      cfg.schedules.eta_fixed = true;
      try {
        cfg.schedules.eta_value = std::stod(eta.substr(6));
      } catch (const std::exception&) {
        throw ConfigError("policy.schedules.eta_rule: bad fixed value");
      }
      if (!(cfg.schedules.eta_value > 0.0)) {
        throw ConfigError("policy.schedules.eta_rule: fixed eta must be > 0");
      }
    } else {
      throw ConfigError("policy.schedules.eta_rule: expected 'beta' or 'fixed:<value>'");
    }
  }

  // Probing.
  const auto probe_it = j.find("probe");
  if (probe_it != j.end()) {
    const json& p = *probe_it;
    cfg.probe.budget = opt_int(p, "budget", 1, "probe");
    if (cfg.probe.budget < 1) throw ConfigError("probe.budget: must be >= 1");
    const std::string source = opt_str(p, "m_source", "paths", "probe");
    if (source == "paths") {
      cfg.probe.m_source = ProbeSettings::MSource::kPaths;
    } else if (source == "edges") {
      cfg.probe.m_source = ProbeSettings::MSource::kEdges;
    } else if (source == "constant") {
      cfg.probe.m_source = ProbeSettings::MSource::kConstant;
      cfg.probe.m_constant = as_num(need(p, "m_constant", "probe"), "probe.m_constant");
    } else {
      throw ConfigError("probe.m_source: expected paths|edges|constant");
    }
    cfg.probe.m_delta = opt_num(p, "m_delta", 0.0, "probe");
    cfg.probe.n_delta = opt_num(p, "n_delta", 0.0, "probe");
    if (cfg.probe.budget > 1 || cfg.probe.m_delta != 0.0 || cfg.probe.n_delta != 0.0) {
      if (cfg.policy != PolicyKind::kAospr || cfg.mode != SpaceMode::kEnumerate) {
        throw ConfigError("probe: multi-path probing requires policy aospr in"
                          " enumerate mode");
      }
      if (cfg.probe.budget > cfg.paths->size()) {
        throw ConfigError("probe.budget: exceeds the number of paths (" +
                          std::to_string(cfg.paths->size()) + ")");
      }
    }
  }

  // Delay.
  const auto delay_it = j.find("delay");
  if (delay_it != j.end()) {
    const json& d = *delay_it;
    const std::string rule = opt_str(d, "rule", "none", "delay");
    if (rule == "none") {
      cfg.delay.rule = DelayConfig::Rule::kNone;
    } else if (rule == "constant") {
      cfg.delay.rule = DelayConfig::Rule::kConstant;
      cfg.delay.value = as_num(need(d, "value", "delay"), "delay.value");
      if (cfg.delay.value < 0) throw ConfigError("delay.value: must be >= 0");
    } else if (rule == "per_edge") {
      cfg.delay.rule = DelayConfig::Rule::kPerEdge;
      const json& arr = need(d, "values", "delay");
      if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
        throw ConfigError("delay.values: expected one entry per edge");
      }
      cfg.delay.per_edge.assign(static_cast<std::size_t>(n) + 1, 0);
      for (int e = 1; e <= n; ++e) {
        cfg.delay.per_edge[static_cast<std::size_t>(e)] =
            as_int(arr[static_cast<std::size_t>(e - 1)],
                   "delay.values[" + std::to_string(e - 1) + "]");
      }
    } else if (rule == "geometric") {
      cfg.delay.rule = DelayConfig::Rule::kGeometric;
      cfg.delay.value = as_num(need(d, "mean", "delay"), "delay.mean");
      if (cfg.delay.value < 0) throw ConfigError("delay.mean: must be >= 0");
    } else {
      throw ConfigError("delay.rule: expected none|constant|per_edge|geometric");
    }
  }

  // Mini-batching.
  const auto batch_it = j.find("minibatch");
  if (batch_it != j.end()) {
    const json& b = *batch_it;
    const json& size = need(b, "size", "minibatch");
    if (size.is_string() && size.get<std::string>() == "auto") {
      const int k = cfg.paths != nullptr ? cfg.paths->max_length() : cfg.subset_size;
      cfg.minibatch = minibatch_auto_size(k, n, cfg.horizon);
    } else {
      cfg.minibatch = as_int(size, "minibatch.size");
      if (cfg.minibatch < 1) throw ConfigError("minibatch.size: must be >= 1");
    }
  }

  // The hindsight comparator needs a table independent of the oracle's own
  // plays; adaptive adversaries make it circular.
  if (cfg.policy == PolicyKind::kOracle &&
      (cfg.regime == Regime::kAdaptive || cfg.model->history_window() > 0)) {
    throw ConfigError("policy.type: oracle undefined against adaptive adversaries");
  }

  // Output.
  const auto out_it = j.find("output");
  if (out_it != j.end()) {
    const json& o = *out_it;
    cfg.output_dir = opt_str(o, "dir", "out", "output");
    cfg.write_csv = opt_bool(o, "write_csv", true, "output");
    cfg.write_json = opt_bool(o, "write_json", true, "output");
    cfg.write_timing = opt_bool(o, "write_timing", true, "output");
  } else {
    cfg.output_dir = "out";
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in '" + file + "': " + e.what());
  }
  return parse_config(j);
}

double theoretical_bound(int k, int n, double m, double t) {
  if (t <= 0.0) return 0.0;
  return 4.0 * k * std::sqrt(t * (static_cast<double>(n) / m) *
                             std::log(static_cast<double>(n)));
}

namespace {

// Strategy-universe helpers shared by the regret bookkeeping.
struct Universe {
  const ExperimentConfig* cfg;

  int max_length() const {
    if (cfg->paths != nullptr) return cfg->paths->max_length();
    if (cfg->mode == SpaceMode::kSubset) return cfg->subset_size;
    int k = 0;
    for (const auto& p : dag_cover_paths(*cfg->dag)) {
      k = std::max(k, static_cast<int>(p.size()));
    }
    return k;
  }

  // Minimum over strategies of the per-edge sum of `weights`.
  double best_sum(const std::vector<double>& weights) const {
    if (cfg->paths != nullptr) {
      double best = 0.0;
      for (int i = 0; i < cfg->paths->size(); ++i) {
        double sum = 0.0;
        for (EdgeId e : cfg->paths->path(i).edges()) {
          sum += weights[static_cast<std::size_t>(e)];
        }
        if (i == 0 || sum < best) best = sum;
      }
      return best;
    }
    if (cfg->mode == SpaceMode::kSubset) {
      std::vector<double> sorted(weights.begin() + 1, weights.end());
      std::nth_element(sorted.begin(), sorted.begin() + cfg->subset_size - 1,
                       sorted.end());
      double sum = 0.0;
      for (int i = 0; i < cfg->subset_size; ++i) sum += sorted[static_cast<std::size_t>(i)];
      return sum;
    }
    const Path best = shortest_path(*cfg->dag, weights);
    double sum = 0.0;
    for (EdgeId e : best.edges()) sum += weights[static_cast<std::size_t>(e)];
    return sum;
  }
};

struct PolicyStack {
  std::unique_ptr<EnumeratedSpace> enum_space;
  std::unique_ptr<KSubsetSpace> subset_space;
  std::unique_ptr<DagSpace> dag_space;
  std::unique_ptr<Policy> base;
  std::unique_ptr<DelayedFeedback> delayed;
  std::unique_ptr<MiniBatch> batched;
  Policy* top = nullptr;
};

PolicyStack build_policy(const ExperimentConfig& cfg, std::uint64_t rep_seed,
                         RngStream& env_rng_for_oracle) {
  PolicyStack stack;
  switch (cfg.policy) {
    case PolicyKind::kAospr: {
      const StrategySpace* space = nullptr;
      if (cfg.mode == SpaceMode::kEnumerate) {
        stack.enum_space = std::make_unique<EnumeratedSpace>(*cfg.paths, *cfg.cover);
        space = stack.enum_space.get();
      } else if (cfg.mode == SpaceMode::kSubset) {
        stack.subset_space = std::make_unique<KSubsetSpace>(cfg.edge_count, cfg.subset_size);
        space = stack.subset_space.get();
      } else {
        stack.dag_space = std::make_unique<DagSpace>(*cfg.dag);
        space = stack.dag_space.get();
      }
      stack.base = std::make_unique<AosprPolicy>(*space, cfg.schedules, cfg.probe);
      break;
    }
    case PolicyKind::kExp3Path:
      stack.base = std::make_unique<Exp3PathPolicy>(*cfg.paths);
      break;
    case PolicyKind::kCombUcb:
      stack.base = std::make_unique<CombUcbPolicy>(*cfg.paths);
      break;
    case PolicyKind::kOracle: {
      if (cfg.regime == Regime::kStochastic || cfg.regime == Regime::kContaminated) {
        stack.base = std::make_unique<OraclePolicy>(
            OraclePolicy::expected_best(*cfg.paths, cfg.means));
      } else {
        // Pre-materialize the table with a copy of the environment stream;
        // the run itself will replay the identical realization.
        RngStream clone = env_rng_for_oracle;
        stack.base = std::make_unique<OraclePolicy>(OraclePolicy::hindsight_best(
            *cfg.paths, *cfg.model, cfg.horizon, clone));
      }
      break;
    }
  }
  stack.top = stack.base.get();
  if (cfg.delay.rule != DelayConfig::Rule::kNone) {
    std::unique_ptr<DelayRule> rule;
    switch (cfg.delay.rule) {
      case DelayConfig::Rule::kConstant:
        rule = DelayRule::constant(static_cast<int>(cfg.delay.value));
        break;
      case DelayConfig::Rule::kPerEdge:
        rule = DelayRule::per_edge(cfg.delay.per_edge);
        break;
      case DelayConfig::Rule::kGeometric:
        rule = DelayRule::geometric(cfg.delay.value);
        break;
      case DelayConfig::Rule::kNone:
        break;
    }
    stack.delayed = std::make_unique<DelayedFeedback>(*stack.top, std::move(rule),
                                                      derive_seed(rep_seed, 0xD31A7));
    stack.top = stack.delayed.get();
  }
  if (cfg.minibatch > 1) {
    stack.batched = std::make_unique<MiniBatch>(*stack.top, cfg.minibatch);
    stack.top = stack.batched.get();
  }
  return stack;
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, int rep) {
  const auto start = Clock::now();
  const std::uint64_t rep_seed = cfg.seed ^ static_cast<std::uint64_t>(rep);
  RngStream env_rng(derive_seed(rep_seed, 0xE4));
  RngStream policy_rng(derive_seed(rep_seed, 0x70));

  PolicyStack stack = build_policy(cfg, rep_seed, env_rng);
  const Universe universe{&cfg};
  const int n = cfg.edge_count;
  const int horizon = cfg.horizon;

  History history(std::max(1, cfg.model->history_window()));
  const bool pseudo_mode =
      cfg.regime == Regime::kStochastic || cfg.regime == Regime::kContaminated;
  double comparator_mu = 0.0;
  if (pseudo_mode) comparator_mu = universe.best_sum(cfg.means);

  std::vector<double> cum_edge_loss;  // realized, adversarial comparator
  if (!pseudo_mode) cum_edge_loss.assign(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> stoch_gap;  // mixed-regime diagnostic gaps off E_a
  std::vector<char> attacked_mask;
  if (cfg.regime == Regime::kMixed) {
    attacked_mask.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& item : cfg.raw["regime"]["attacked_edges"]) {
      attacked_mask[item.get<std::size_t>()] = 1;
    }
    double best = 2.0;
    for (EdgeId e = 1; e <= n; ++e) {
      if (!attacked_mask[static_cast<std::size_t>(e)]) {
        best = std::min(best, cfg.means[static_cast<std::size_t>(e)]);
      }
    }
    stoch_gap.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (EdgeId e = 1; e <= n; ++e) {
      if (!attacked_mask[static_cast<std::size_t>(e)]) {
        stoch_gap[static_cast<std::size_t>(e)] =
            cfg.means[static_cast<std::size_t>(e)] - best;
      }
    }
  }

  RepetitionResult result;
  result.cum_regret.resize(static_cast<std::size_t>(horizon));
  result.play_counts.assign(static_cast<std::size_t>(n) + 1, 0);
  std::vector<char> probed_seen(static_cast<std::size_t>(n) + 1, 0);
  int probed_remaining = n;

  double cum_pseudo = 0.0;
  double cum_realized = 0.0;
  double stoch_part = 0.0;

  for (int t = 1; t <= horizon; ++t) {
    const SelectResult sel = stack.top->select(policy_rng);
    const LossVector losses = cfg.model->losses(t, history, env_rng);
    check_loss_range(losses);

    std::vector<Observation> observations;
    observations.reserve(sel.probed_edges.size());
    for (EdgeId e : sel.probed_edges) {
      Observation obs;
      obs.edge = e;
      obs.loss = losses[static_cast<std::size_t>(e)];
      obs.divisor = sel.divisor[static_cast<std::size_t>(e)];
      obs.strategy = sel.chosen_index;
      observations.push_back(obs);
      if (probed_seen[static_cast<std::size_t>(e)] == 0) {
        probed_seen[static_cast<std::size_t>(e)] = 1;
        if (--probed_remaining == 0 && result.cover_round < 0) result.cover_round = t;
      }
    }
    stack.top->observe(observations);
    history.push(sel.chosen);

    for (EdgeId e : sel.chosen) ++result.play_counts[static_cast<std::size_t>(e)];

    if (pseudo_mode) {
      double mu_sum = 0.0;
      for (EdgeId e : sel.chosen) mu_sum += cfg.means[static_cast<std::size_t>(e)];
      cum_pseudo += mu_sum - comparator_mu;
      result.cum_regret[static_cast<std::size_t>(t - 1)] = cum_pseudo;
    } else {
      double realized = 0.0;
      for (EdgeId e : sel.chosen) realized += losses[static_cast<std::size_t>(e)];
      cum_realized += realized;
      for (EdgeId e = 1; e <= n; ++e) {
        cum_edge_loss[static_cast<std::size_t>(e)] += losses[static_cast<std::size_t>(e)];
      }
      result.cum_regret[static_cast<std::size_t>(t - 1)] =
          cum_realized - universe.best_sum(cum_edge_loss);
      if (cfg.regime == Regime::kMixed) {
        for (EdgeId e : sel.chosen) stoch_part += stoch_gap[static_cast<std::size_t>(e)];
      }
    }
  }
  stack.top->finish();

  result.final_regret = result.cum_regret.back();
  result.stochastic_part_final = stoch_part;

  if (pseudo_mode) {
    // Per-link decomposition of the pseudo-regret; exact whenever every
    // strategy has equal length and the best strategy is built from best
    // links.
    const StochasticSpec spec = StochasticSpec::make(cfg.means);
    double decomposition = 0.0;
    for (EdgeId e = 1; e <= n; ++e) {
      decomposition += static_cast<double>(result.play_counts[static_cast<std::size_t>(e)]) *
                       spec.gap[static_cast<std::size_t>(e)];
    }
    result.decomposition_final = decomposition;
    const int k = universe.max_length();
    const double best_mu = cfg.means[static_cast<std::size_t>(spec.best_edge)];
    const bool decomposable = std::abs(comparator_mu - k * best_mu) < 1e-12;
    if (decomposable) {
      result.decomposition_checked = true;
      if (std::abs(decomposition - result.final_regret) > 1e-9 * std::max(1.0, std::abs(decomposition))) {
        throw InternalInvariant(
            "pseudo-regret decomposition mismatch: per-link form " +
            std::to_string(decomposition) + " vs path form " +
            std::to_string(result.final_regret));
      }
    }
  }

  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  RunResult run;
  run.config_echo = cfg.raw;
  run.horizon = cfg.horizon;
  switch (cfg.policy) {
    case PolicyKind::kAospr: run.policy_name = "aospr"; break;
    case PolicyKind::kExp3Path: run.policy_name = "exp3_path"; break;
    case PolicyKind::kCombUcb: run.policy_name = "combucb1"; break;
    case PolicyKind::kOracle: run.policy_name = "oracle"; break;
  }
  run.reps.resize(static_cast<std::size_t>(cfg.repetitions));

  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, cfg.repetitions));
  if (workers == 1) {
    for (int r = 0; r < cfg.repetitions; ++r) run.reps[static_cast<std::size_t>(r)] =
        run_repetition(cfg, r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= cfg.repetitions) return;
          try {
            run.reps[static_cast<std::size_t>(r)] = run_repetition(cfg, r);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Deterministic reduce ordered by repetition index.
  const int horizon = cfg.horizon;
  run.mean_regret.assign(static_cast<std::size_t>(horizon), 0.0);
  run.std_regret.assign(static_cast<std::size_t>(horizon), 0.0);
  const double r_count = static_cast<double>(cfg.repetitions);
  for (const RepetitionResult& rep : run.reps) {
    for (int t = 0; t < horizon; ++t) {
      run.mean_regret[static_cast<std::size_t>(t)] +=
          rep.cum_regret[static_cast<std::size_t>(t)];
    }
  }
  for (double& v : run.mean_regret) v /= r_count;
  if (cfg.repetitions > 1) {
    for (const RepetitionResult& rep : run.reps) {
      for (int t = 0; t < horizon; ++t) {
        const double d = rep.cum_regret[static_cast<std::size_t>(t)] -
                         run.mean_regret[static_cast<std::size_t>(t)];
        run.std_regret[static_cast<std::size_t>(t)] += d * d;
      }
    }
    for (double& v : run.std_regret) v = std::sqrt(v / (r_count - 1.0));
  }

  double final_sum = 0.0;
  for (const RepetitionResult& rep : run.reps) final_sum += rep.final_regret;
  run.final_mean = final_sum / r_count;
  double final_var = 0.0;
  for (const RepetitionResult& rep : run.reps) {
    final_var += (rep.final_regret - run.final_mean) * (rep.final_regret - run.final_mean);
  }
  run.final_std = cfg.repetitions > 1 ? std::sqrt(final_var / (r_count - 1.0)) : 0.0;

  if (cfg.overlay_bound) {
    const Universe universe{&cfg};
    const int k = universe.max_length();
    run.bound.resize(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
      run.bound[static_cast<std::size_t>(t - 1)] = theoretical_bound(
          k, cfg.edge_count, static_cast<double>(cfg.probe.budget), t);
    }
  }

  run.seconds_total = std::chrono::duration<double>(Clock::now() - start).count();
  run.per_round_us =
      run.seconds_total * 1e6 / (static_cast<double>(horizon) * r_count);
  return run;
}

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string format_csv(const RunResult& run) {
  std::string out = run.bound.empty() ? "round,mean_regret,std_regret\n"
                                      : "round,mean_regret,std_regret,bound\n";
  char line[160];
  for (int t = 1; t <= run.horizon; ++t) {
    if (run.bound.empty()) {
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g\n", t,
                    run.mean_regret[static_cast<std::size_t>(t - 1)],
                    run.std_regret[static_cast<std::size_t>(t - 1)]);
    } else {
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g\n", t,
                    run.mean_regret[static_cast<std::size_t>(t - 1)],
                    run.std_regret[static_cast<std::size_t>(t - 1)],
                    run.bound[static_cast<std::size_t>(t - 1)]);
    }
    out += line;
  }
  return out;
}

json summary_json(const RunResult& run) {
  json reps = json::array();
  for (const RepetitionResult& rep : run.reps) {
    json r;
    r["final_regret"] = rep.final_regret;
    r["cover_round"] = rep.cover_round;
    r["play_counts"] = std::vector<long long>(rep.play_counts.begin() + 1,
                                              rep.play_counts.end());
    if (rep.decomposition_checked) {
      r["decomposition_final"] = rep.decomposition_final;
    }
    r["stochastic_part_final"] = rep.stochastic_part_final;
    reps.push_back(std::move(r));
  }
  json s;
  s["policy"] = run.policy_name;
  s["horizon"] = run.horizon;
  s["repetitions"] = run.reps.size();
  s["final_mean"] = run.final_mean;
  s["final_std"] = run.final_std;
  s["per_repetition"] = std::move(reps);
  return s;
}

}  // namespace

std::vector<std::string> emit(const RunResult& run, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  fs::create_directories(cfg.output_dir);
  if (cfg.write_csv) {
    const std::string path = (fs::path(cfg.output_dir) / "results.csv").string();
    write_text_file(path, format_csv(run));
    written.push_back(path);
  }
  if (cfg.write_json) {
    json doc;
    doc["schema_version"] = 1;
    doc["config"] = run.config_echo;
    doc["summary"] = summary_json(run);
    const std::string path = (fs::path(cfg.output_dir) / "results.json").string();
    write_text_file(path, doc.dump(2) + "\n");
    written.push_back(path);
  }
  if (cfg.write_timing) {
    json t;
    t["seconds_total"] = run.seconds_total;
    t["per_round_us"] = run.per_round_us;
    json reps = json::array();
    for (const RepetitionResult& rep : run.reps) reps.push_back(rep.seconds);
    t["per_repetition_seconds"] = std::move(reps);
    const std::string path = (fs::path(cfg.output_dir) / "timing.json").string();
    write_text_file(path, t.dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

namespace {

json* locate(json& root, const std::string& dotted) {
  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', pos);
    const std::string key = dotted.substr(pos, dot - pos);
    if (key.empty()) throw ConfigError("sweep key: empty segment in '" + dotted + "'");
    if (!node->is_object()) {
      throw ConfigError("sweep key: '" + dotted + "' walks through a non-object");
    }
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    pos = dot + 1;
  }
}

std::string tag_of(const json& value) {
  std::string tag = value.is_string() ? value.get<std::string>() : value.dump();
  for (char& c : tag) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) c = '_';
  }
  return tag;
}

}  // namespace

SweepResult run_sweep(const json& base_config, const std::string& key,
                      const std::vector<json>& values) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  SweepResult sweep;
  for (const json& value : values) {
    json variant = base_config;
    *locate(variant, key) = value;
    const ExperimentConfig cfg = parse_config(variant);
    sweep.tags.push_back(tag_of(value));
    sweep.runs.push_back(run_experiment(cfg));
  }
  return sweep;
}

std::vector<std::string> emit_sweep(const SweepResult& sweep,
                                    const ExperimentConfig& base) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  fs::create_directories(base.output_dir);

  std::string header = "round";
  for (const std::string& tag : sweep.tags) {
    header += ",mean_" + tag + ",std_" + tag;
  }
  header += "\n";
  std::string csv = header;
  const int horizon = sweep.runs.front().horizon;
  char cell[64];
  for (int t = 1; t <= horizon; ++t) {
    csv += std::to_string(t);
    for (const RunResult& run : sweep.runs) {
      std::snprintf(cell, sizeof(cell), ",%.10g,%.10g",
                    run.mean_regret[static_cast<std::size_t>(t - 1)],
                    run.std_regret[static_cast<std::size_t>(t - 1)]);
      csv += cell;
    }
    csv += "\n";
  }
  const std::string csv_path = (fs::path(base.output_dir) / "sweep.csv").string();
  write_text_file(csv_path, csv);
  written.push_back(csv_path);

  json doc;
  doc["schema_version"] = 1;
  json runs = json::array();
  for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
    json entry;
    entry["tag"] = sweep.tags[i];
    entry["summary"] = summary_json(sweep.runs[i]);
    runs.push_back(std::move(entry));
  }
  doc["runs"] = std::move(runs);
  const std::string json_path = (fs::path(base.output_dir) / "sweep.json").string();
  write_text_file(json_path, doc.dump(2) + "\n");
  written.push_back(json_path);
  return written;
}

std::vector<BenchPoint> run_bench(const std::vector<std::pair<int, int>>& dp_sizes,
                                  std::pair<int, int> compare_size, int rounds) {
  std::vector<BenchPoint> points;

  const auto time_policy = [rounds](Policy& policy, const StochasticSpec& spec,
                                    std::uint64_t seed) {
    RngStream env_rng(derive_seed(seed, 0xE4));
    RngStream policy_rng(derive_seed(seed, 0x70));
    // Warmup keeps first-touch allocation out of the measurement.
    for (int t = 0; t < 32; ++t) {
      const LossVector losses = gen_stochastic(spec, env_rng);
      policy_step(policy, losses, policy_rng);
    }
    const auto start = Clock::now();
    for (int t = 0; t < rounds; ++t) {
      const LossVector losses = gen_stochastic(spec, env_rng);
      policy_step(policy, losses, policy_rng);
    }
    return std::chrono::duration<double>(Clock::now() - start).count() * 1e6 / rounds;
  };

  const auto make_spec = [](int n, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<double> mu(static_cast<std::size_t>(n) + 1, 0.0);
    for (int e = 1; e <= n; ++e) mu[static_cast<std::size_t>(e)] = rng.uniform(0.1, 0.9);
    return StochasticSpec::make(mu);
  };

  for (const auto& [n, k] : dp_sizes) {
    BenchPoint point;
    point.n = n;
    point.k = k;
    const StochasticSpec spec = make_spec(n, 11u);
    // Best of three trials guards against scheduler noise.
    double best = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      KSubsetSpace space(n, k);
      AosprPolicy policy(space, Schedules{});
      const double us = time_policy(policy, spec, 1000u + static_cast<std::uint64_t>(trial));
      if (trial == 0 || us < best) best = us;
    }
    point.dp_us = best;
    points.push_back(point);
  }

  {
    const auto [n, k] = compare_size;
    BenchPoint point;
    point.n = n;
    point.k = k;
    const StochasticSpec spec = make_spec(n, 13u);
    double best_dp = 0.0;
    double best_enum = 0.0;
    // Enumerate all k-subsets once; both modes pay their own per-round cost.
    std::vector<Path> subsets;
    std::vector<EdgeId> current;
    auto emit_subsets = [&](auto&& self, EdgeId from) -> void {
      if (static_cast<int>(current.size()) == k) {
        subsets.emplace_back(current, n);
        return;
      }
      for (EdgeId e = from; e <= n - (k - static_cast<int>(current.size())) + 1; ++e) {
        current.push_back(e);
        self(self, e + 1);
        current.pop_back();
      }
    };
    emit_subsets(emit_subsets, 1);
    const PathSet subset_paths(std::move(subsets), n);
    const CoveringSet subset_cover = covering_set(subset_paths);
    for (int trial = 0; trial < 3; ++trial) {
      KSubsetSpace space(n, k);
      AosprPolicy policy(space, Schedules{});
      const double us = time_policy(policy, spec, 2000u + static_cast<std::uint64_t>(trial));
      if (trial == 0 || us < best_dp) best_dp = us;
    }
    for (int trial = 0; trial < 3; ++trial) {
      EnumeratedSpace space(subset_paths, subset_cover);
      AosprPolicy policy(space, Schedules{});
      const double us = time_policy(policy, spec, 3000u + static_cast<std::uint64_t>(trial));
      if (trial == 0 || us < best_enum) best_enum = us;
    }
    point.dp_us = best_dp;
    point.enumerate_us = best_enum;
    points.push_back(point);
  }
  return points;
}

}  // namespace aospr
