#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aospr/baselines.hpp"
#include "aospr/environment.hpp"
#include "aospr/graph.hpp"
#include "aospr/policy.hpp"
#include "aospr/probing.hpp"
#include "aospr/wrappers.hpp"

namespace aospr {

using json = nlohmann::json;

enum class PolicyKind { kAospr, kExp3Path, kCombUcb, kOracle };
enum class SpaceMode { kEnumerate, kSubset, kDag };

struct DelayConfig {
  enum class Rule { kNone, kConstant, kPerEdge, kGeometric };
  Rule rule = Rule::kNone;
  double value = 0.0;
  std::vector<int> per_edge;  // size n+1 when Rule::kPerEdge
};

// Fully validated experiment description. Heavyweight shared pieces (graph,
// path set, contamination plan) are built once and shared read-only across
// repetitions.
struct ExperimentConfig {
  json raw;

  std::shared_ptr<const Dag> dag;            // null in pure subset mode
  std::shared_ptr<const PathSet> paths;      // null when not enumerable
  std::shared_ptr<const CoveringSet> cover;  // with paths
  int edge_count = 0;

  std::shared_ptr<const LossModel> model;
  Regime regime = Regime::kStochastic;
  std::vector<double> means;  // stochastic-like regimes, size n+1

  PolicyKind policy = PolicyKind::kAospr;
  SpaceMode mode = SpaceMode::kEnumerate;
  int subset_size = 0;  // subset mode
  Schedules schedules;
  ProbeSettings probe;
  DelayConfig delay;
  int minibatch = 1;  // resolved size ("auto" resolved against the horizon)

  int horizon = 0;
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::uint64_t path_cap = 4096;
  int workers = 0;  // 0: hardware concurrency
  bool overlay_bound = false;

  std::string output_dir;
  bool write_csv = true;
  bool write_json = true;
  bool write_timing = true;
};

ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& file);

struct RepetitionResult {
  std::vector<double> cum_regret;      // headline series, per round
  double final_regret = 0.0;
  double decomposition_final = 0.0;    // per-link gap form (stochastic-like)
  bool decomposition_checked = false;
  double stochastic_part_final = 0.0;  // mixed-regime diagnostic
  std::vector<long long> play_counts;  // per edge at the horizon
  int cover_round = -1;                // first round all edges probed
  double seconds = 0.0;
};

struct RunResult {
  json config_echo;
  std::string policy_name;
  int horizon = 0;
  std::vector<RepetitionResult> reps;
  std::vector<double> mean_regret;  // per round
  std::vector<double> std_regret;
  std::vector<double> bound;  // optional overlay, empty if disabled
  double final_mean = 0.0;
  double final_std = 0.0;
  double seconds_total = 0.0;
  double per_round_us = 0.0;
};

RunResult run_experiment(const ExperimentConfig& config);

// Theoretical adversarial-regret overlay 4 k sqrt(t (n/m) ln n).
double theoretical_bound(int k, int n, double m, double t);

// Writes results.csv / results.json (deterministic) and timing.json into
// config.output_dir per the output flags. Returns the emitted file paths.
std::vector<std::string> emit(const RunResult& result, const ExperimentConfig& config);

// Multi-value parameter sweep over a dotted config key. Each run's series
// lands in one shared CSV column pair (mean_<value>, std_<value>).
struct SweepResult {
  std::vector<std::string> tags;
  std::vector<RunResult> runs;
};
SweepResult run_sweep(const json& base_config, const std::string& key,
                      const std::vector<json>& values);
std::vector<std::string> emit_sweep(const SweepResult& sweep, const ExperimentConfig& base);

// Scaling benchmark: per-round cost of the DP-backed policy at the given
// sizes plus an enumerated-vs-DP comparison on the same instance.
struct BenchPoint {
  int n = 0;
  int k = 0;
  double dp_us = 0.0;        // per round
  double enumerate_us = 0.0;  // 0 when not measured
};
std::vector<BenchPoint> run_bench(const std::vector<std::pair<int, int>>& dp_sizes,
                                  std::pair<int, int> compare_size, int rounds);

}  // namespace aospr
