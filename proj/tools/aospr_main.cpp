#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aospr/harness.hpp"

namespace {

using aospr::json;

int cmd_run(const std::string& config_file) {
  const aospr::ExperimentConfig cfg = aospr::load_config(config_file);
  const aospr::RunResult run = aospr::run_experiment(cfg);
  const std::vector<std::string> files = aospr::emit(run, cfg);
  std::printf("policy=%s horizon=%d repetitions=%zu final_mean=%.6g final_std=%.6g\n",
              run.policy_name.c_str(), run.horizon, run.reps.size(), run.final_mean,
              run.final_std);
  for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

int cmd_validate(const std::string& config_file) {
  aospr::load_config(config_file);
  std::printf("config ok: %s\n", config_file.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_file, const std::string& param) {
  const std::size_t eq = param.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= param.size()) {
    throw aospr::ConfigError("--param: expected key=v1,v2,...");
  }
  const std::string key = param.substr(0, eq);
  std::vector<json> values;
  std::string rest = param.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const std::size_t comma = rest.find(',', pos);
    const std::string raw =
        rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (raw.empty()) throw aospr::ConfigError("--param: empty value");
    json value;
    try {
      value = json::parse(raw);
    } catch (const std::exception&) {
      value = raw;  // plain string value
    }
    values.push_back(std::move(value));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  std::ifstream in(config_file);
  if (!in) throw aospr::ConfigError("cannot open config file '" + config_file + "'");
  json base;
  in >> base;
  const aospr::ExperimentConfig base_cfg = aospr::parse_config(base);
  const aospr::SweepResult sweep = aospr::run_sweep(base, key, values);
  for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
    std::printf("%s=%s final_mean=%.6g final_std=%.6g\n", key.c_str(),
                sweep.tags[i].c_str(), sweep.runs[i].final_mean,
                sweep.runs[i].final_std);
  }
  for (const std::string& f : aospr::emit_sweep(sweep, base_cfg)) {
    std::printf("wrote %s\n", f.c_str());
  }
  return 0;
}

int cmd_bench(int rounds) {
  const std::vector<std::pair<int, int>> sizes = {{48, 6}, {96, 6}, {192, 6}};
  const std::vector<aospr::BenchPoint> points =
      aospr::run_bench(sizes, {24, 4}, rounds);
  std::printf("%-10s %-6s %-14s %-14s\n", "n", "k", "dp_us/round", "enum_us/round");
  for (const aospr::BenchPoint& p : points) {
    if (p.enumerate_us > 0.0) {
      std::printf("%-10d %-6d %-14.3f %-14.3f (speedup %.1fx)\n", p.n, p.k, p.dp_us,
                  p.enumerate_us, p.enumerate_us / p.dp_us);
    } else {
      std::printf("%-10d %-6d %-14.3f %-14s\n", p.n, p.k, p.dp_us, "-");
    }
  }
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    if (points[i].k == points[i - 1].k && points[i].n == 2 * points[i - 1].n) {
      std::printf("scaling n=%d -> n=%d: factor %.2f\n", points[i - 1].n, points[i].n,
                  points[i].dp_us / points[i - 1].dp_us);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive shortest-path routing simulator"};
  app.require_subcommand(1);

  std::string config_file;
  std::string param;
  int bench_rounds = 600;

  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_file, "JSON config file")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("config", config_file, "JSON config file")->required();
  sweep->add_option("--param", param, "key=v1,v2,... (dotted config key)")->required();

  CLI::App* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("config", config_file, "JSON config file")->required();

  CLI::App* bench = app.add_subcommand("bench", "Per-round cost scaling benchmark");
  bench->add_option("--rounds", bench_rounds, "measured rounds per size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_file);
    if (sweep->parsed()) return cmd_sweep(config_file, param);
    if (validate->parsed()) return cmd_validate(config_file);
    if (bench->parsed()) return cmd_bench(bench_rounds);
  } catch (const aospr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const aospr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
