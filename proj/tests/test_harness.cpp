#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aospr/harness.hpp"

using namespace aospr;
namespace fs = std::filesystem;

namespace {

json base_config(const std::string& out_dir) {
  return json{
      {"graph", {{"generator", "parallel_chains"}, {"chains", 3}, {"length", 2}}},
      {"regime",
       {{"type", "stochastic"}, {"means", {0.1, 0.1, 0.3, 0.3, 0.3, 0.3}}}},
      {"policy", {{"type", "aospr"}}},
      {"horizon", 50},
      {"repetitions", 2},
      {"seed", 42},
      {"output", {{"dir", out_dir}}},
  };
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("aospr_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config errors carry precise field paths") {
  json j = base_config("unused");
  j.erase("horizon");
  CHECK_THROWS_WITH_AS(parse_config(j), "config.horizon: missing", ConfigError);

  j = base_config("unused");
  j["regime"]["means"][2] = 1.7;
  CHECK_THROWS_WITH_AS(parse_config(j), "regime.means[2]: outside [0,1]",
                       ConfigError);

  j = base_config("unused");
  j["policy"]["type"] = "mystery";
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = base_config("unused");
  j["regime"]["means"] = {0.1, 0.2};  // wrong arity
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("path explosions at parse time point at the cap") {
  json j = base_config("unused");
  j["graph"] = {{"generator", "layered"},
                {"widths", {2, 2, 2, 2, 2, 2, 2, 2, 2, 2}}};
  j["path_cap"] = 100;
  j["regime"]["means"] = std::vector<double>(20, 0.2);
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("repeated runs produce byte-identical result files") {
  const fs::path dir = fresh_dir("det");
  json j = base_config(dir.string());
  j["horizon"] = 10;
  const ExperimentConfig cfg = parse_config(j);
  emit(run_experiment(cfg), cfg);
  const std::string csv_first = slurp((dir / "results.csv").string());
  const std::string json_first = slurp((dir / "results.json").string());
  emit(run_experiment(cfg), cfg);
  CHECK(slurp((dir / "results.csv").string()) == csv_first);
  CHECK(slurp((dir / "results.json").string()) == json_first);
}

TEST_CASE("serial and parallel repetition execution agree") {
  json j = base_config("unused");
  j["horizon"] = 200;
  j["repetitions"] = 4;
  j["workers"] = 1;
  const RunResult serial = run_experiment(parse_config(j));
  j["workers"] = 4;
  const RunResult parallel = run_experiment(parse_config(j));
  CHECK(serial.mean_regret == parallel.mean_regret);
  CHECK(serial.final_mean == parallel.final_mean);
}

TEST_CASE("the oracle has identically zero pseudo-regret") {
  json j = base_config("unused");
  j["policy"]["type"] = "oracle";
  j["horizon"] = 500;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.final_mean == 0.0);
  for (double v : run.mean_regret) CHECK(v == 0.0);
}

TEST_CASE("pseudo-regret decomposition is checked on decomposable instances") {
  json j = base_config("unused");
  j["horizon"] = 300;
  const RunResult run = run_experiment(parse_config(j));
  for (const RepetitionResult& rep : run.reps) {
    CHECK(rep.decomposition_checked);
    CHECK(rep.decomposition_final ==
          doctest::Approx(rep.final_regret).epsilon(1e-9));
  }
}

TEST_CASE("bound overlay: frozen value, zero start, and budget scaling") {
  CHECK(theoretical_bound(2, 6, 1.0, 10000.0) ==
        doctest::Approx(2623.0).epsilon(1e-3));
  CHECK(theoretical_bound(2, 6, 1.0, 0.0) == 0.0);
  const double full = theoretical_bound(2, 6, 1.0, 5000.0);
  const double accelerated = theoretical_bound(2, 6, 4.0, 5000.0);
  CHECK(accelerated == doctest::Approx(0.5 * full).epsilon(1e-12));
}

TEST_CASE("adversarial runs report hindsight regret with a final nonnegative") {
  json j = base_config("unused");
  j["regime"] = {{"type", "oblivious"},
                 {"schedule",
                  {{"type", "periodic_blocks"},
                   {"period", 50},
                   {"groups", 3},
                   {"high", 0.9},
                   {"low", 0.1}}}};
  j["horizon"] = 400;
  j["bound_overlay"] = true;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.final_mean >= 0.0);
  REQUIRE(run.bound.size() == 400);
  CHECK(run.bound[99] ==
        doctest::Approx(theoretical_bound(2, 6, 1.0, 100.0)).epsilon(1e-12));
}

TEST_CASE("single-round runs emit a header plus one data row") {
  const fs::path dir = fresh_dir("tiny");
  json j = base_config(dir.string());
  j["horizon"] = 1;
  const ExperimentConfig cfg = parse_config(j);
  emit(run_experiment(cfg), cfg);
  const std::string csv = slurp((dir / "results.csv").string());
  int lines = 0;
  for (char c : csv) lines += (c == '\n');
  CHECK(lines == 2);
  CHECK(csv.rfind("round,mean_regret,std_regret\n", 0) == 0);
}

TEST_CASE("result json round-trips its summary fields exactly") {
  const fs::path dir = fresh_dir("roundtrip");
  json j = base_config(dir.string());
  j["horizon"] = 64;
  const ExperimentConfig cfg = parse_config(j);
  const RunResult run = run_experiment(cfg);
  emit(run, cfg);
  json parsed;
  std::ifstream in((dir / "results.json").string());
  in >> parsed;
  CHECK(parsed["schema_version"] == 1);
  CHECK(parsed["summary"]["final_mean"].get<double>() == run.final_mean);
  CHECK(parsed["summary"]["final_std"].get<double>() == run.final_std);
  CHECK(parsed["summary"]["horizon"].get<int>() == run.horizon);
  CHECK(parsed["config"] == cfg.raw);
  const auto& reps = parsed["summary"]["per_repetition"];
  REQUIRE(reps.size() == run.reps.size());
  for (std::size_t i = 0; i < run.reps.size(); ++i) {
    CHECK(reps[i]["final_regret"].get<double>() == run.reps[i].final_regret);
  }
}

TEST_CASE("sweeps run every value and emit joint columns") {
  const fs::path dir = fresh_dir("sweep");
  json j = base_config(dir.string());
  j["horizon"] = 40;
  const SweepResult sweep =
      run_sweep(j, "policy.type", {json("aospr"), json("exp3_path")});
  REQUIRE(sweep.runs.size() == 2);
  CHECK(sweep.runs[0].policy_name == "aospr");
  CHECK(sweep.runs[1].policy_name == "exp3_path");
  emit_sweep(sweep, parse_config(j));
  const std::string csv = slurp((dir / "sweep.csv").string());
  CHECK(csv.rfind("round,mean_aospr,std_aospr,mean_exp3_path,std_exp3_path\n", 0) == 0);
}

TEST_CASE("mixed regime reports the stochastic-part diagnostic") {
  json j = base_config("unused");
  j["regime"] = {{"type", "mixed"},
                 {"means", {0.1, 0.1, 0.3, 0.3, 0.3, 0.3}},
                 {"attacked_edges", {1}},
                 {"adversary",
                  {{"type", "oblivious"},
                   {"schedule", {{"type", "constant"}, {"value", 0.9}}}}}};
  j["horizon"] = 300;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.final_mean >= -1e-9);
  for (const RepetitionResult& rep : run.reps) {
    CHECK(rep.stochastic_part_final >= 0.0);
  }
}

TEST_CASE("oracle against an adaptive adversary is rejected") {
  json j = base_config("unused");
  j["policy"]["type"] = "oracle";
  j["regime"] = {{"type", "adaptive"}, {"theta", 2}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("full-budget probing covers every edge in round one") {
  json j = base_config("unused");
  j["probe"] = {{"budget", 3}};
  j["horizon"] = 20;
  const RunResult run = run_experiment(parse_config(j));
  for (const RepetitionResult& rep : run.reps) CHECK(rep.cover_round == 1);
}

TEST_CASE("contaminated configs run end to end") {
  json j = base_config("unused");
  j["regime"] = {{"type", "contaminated"},
                 {"means", {0.1, 0.1, 0.3, 0.3, 0.3, 0.3}},
                 {"zeta", 0.25},
                 {"onset", 10},
                 {"until", 200}};
  j["horizon"] = 300;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.reps.size() == 2);
}

TEST_CASE("auto minibatch size resolves against the horizon") {
  json j = base_config("unused");
  j["minibatch"] = {{"size", "auto"}};
  j["horizon"] = 1000000;
  const ExperimentConfig cfg = parse_config(j);
  CHECK(cfg.minibatch == 34);  // k=2, n=6
}

TEST_CASE("subset mode runs without a graph") {
  json j = base_config("unused");
  j.erase("graph");
  j["edges"] = 6;
  j["policy"] = {{"type", "aospr"}, {"mode", "subset"}, {"subset_size", 2}};
  j["horizon"] = 100;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.reps.size() == 2);
  CHECK(run.final_mean >= 0.0);
}

TEST_CASE("dag mode runs against the adaptive adversary") {
  json j = base_config("unused");
  j["policy"] = {{"type", "aospr"}, {"mode", "dag"}};
  j["regime"] = {{"type", "adaptive"}, {"theta", 1}};
  j["horizon"] = 200;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.reps.size() == 2);
}

TEST_CASE("graph files load with edge ids in file order") {
  const fs::path dir = fresh_dir("gfile");
  const fs::path file = dir / "graph.json";
  std::ofstream out(file);
  out << R"({"vertices": 4, "edges": [[0,2],[2,1],[0,3],[3,1]], "source": 0,)"
      << R"( "destination": 1})";
  out.close();
  json j = base_config("unused");
  j["graph"] = {{"file", file.string()}};
  j["regime"]["means"] = {0.1, 0.1, 0.3, 0.3};
  j["horizon"] = 30;
  const RunResult run = run_experiment(parse_config(j));
  CHECK(run.reps.size() == 2);
}
