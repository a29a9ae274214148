#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "aospr/baselines.hpp"
#include "aospr/environment.hpp"
#include "aospr/graph.hpp"
#include "aospr/policy.hpp"

using namespace aospr;

namespace {

Dag two_chains() { return build_dag({{0, 2}, {2, 1}, {0, 3}, {3, 1}}, 0, 1); }

}  // namespace

TEST_CASE("exp3 mixing schedule: frozen value and early saturation") {
  CHECK(Exp3PathPolicy::gamma_schedule(100, 3) ==
        doctest::Approx(0.138497).epsilon(1e-5));
  CHECK(std::abs(Exp3PathPolicy::gamma_schedule(100, 3) - 0.1385) < 2e-5);
  CHECK(Exp3PathPolicy::gamma_schedule(1, 3) == 1.0);
}

TEST_CASE("exp3 distribution normalizes and mixes uniformly") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  Exp3PathPolicy policy(paths);
  const std::vector<double> p = policy.distribution(100);
  double total = 0.0;
  for (double v : p) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exp3 splits identical-loss paths evenly across repetitions") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  const auto schedule = ObliviousSchedule::constant(4, 0.4);
  const int horizon = 2000;
  const int reps = 40;
  std::vector<double> freqs;
  for (int r = 0; r < reps; ++r) {
    Exp3PathPolicy policy(paths);
    RngStream rng(derive_seed(9, static_cast<std::uint64_t>(r)));
    long long first = 0;
    for (int t = 1; t <= horizon; ++t) {
      SelectResult sel;
      policy_step(policy, gen_oblivious(*schedule, t), rng, &sel);
      if (sel.chosen_index == 0) ++first;
    }
    freqs.push_back(static_cast<double>(first) / horizon);
  }
  double mean = 0.0;
  for (double f : freqs) mean += f;
  mean /= reps;
  double var = 0.0;
  for (double f : freqs) var += (f - mean) * (f - mean);
  var /= (reps - 1);
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean - 0.5) <= 3.0 * se + 1e-9);
}

TEST_CASE("exp3 replays deterministically under a fixed seed") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.2, 0.2, 0.6, 0.6});
  std::vector<int> first;
  for (int pass = 0; pass < 2; ++pass) {
    Exp3PathPolicy policy(paths);
    RngStream rng(77);
    RngStream env(78);
    std::vector<int> chosen;
    for (int t = 1; t <= 200; ++t) {
      SelectResult sel;
      policy_step(policy, gen_stochastic(spec, env), rng, &sel);
      chosen.push_back(sel.chosen_index);
    }
    if (pass == 0) {
      first = chosen;
    } else {
      CHECK(first == chosen);
    }
  }
}

TEST_CASE("exp3 prefers the better path over time") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.1, 0.1, 0.6, 0.6});
  Exp3PathPolicy policy(paths);
  RngStream rng(5);
  RngStream env(6);
  long long better = 0;
  const int horizon = 50000;
  for (int t = 1; t <= horizon; ++t) {
    SelectResult sel;
    policy_step(policy, gen_stochastic(spec, env), rng, &sel);
    if (sel.chosen_index == 0) ++better;
  }
  CHECK(static_cast<double>(better) / horizon > 0.6);
}

TEST_CASE("ucb baseline forces unobserved edges first") {
  const Dag dag = build_dag({{0, 2}, {2, 1}, {0, 3}, {3, 1}, {0, 4}, {4, 1}}, 0, 1);
  const PathSet paths = enumerate_paths(dag, 10);
  CombUcbPolicy policy(paths);
  RngStream rng(1);
  // Round 1: everything unobserved, lexicographic tie-break picks path 0.
  SelectResult sel = policy.select(rng);
  CHECK(sel.chosen_index == 0);
  std::vector<Observation> obs;
  for (EdgeId e : sel.probed_edges) obs.push_back({e, 0.0, 1.0, sel.chosen_index});
  policy.observe(obs);
  // Paths 1 and 2 still carry two unobserved edges each; path 1 wins the tie
  // even though path 0 looked perfect.
  CHECK(policy.pick_path() == 1);
}

TEST_CASE("ucb tie on identical statistics goes to the lowest index") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  CombUcbPolicy policy(paths);
  RngStream rng(2);
  for (int t = 1; t <= 2; ++t) {
    const SelectResult sel = policy.select(rng);
    std::vector<Observation> obs;
    for (EdgeId e : sel.probed_edges) obs.push_back({e, 0.5, 1.0, sel.chosen_index});
    policy.observe(obs);
  }
  // Equal means, equal counts on every edge.
  CHECK(policy.pick_path() == 0);
}

TEST_CASE("raising an edge's observed mean never promotes its paths") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  auto seeded = [&](double mean_edge3) {
    CombUcbPolicy policy(paths);
    std::vector<Observation> obs;
    obs.push_back({1, 0.5, 1.0, 0});
    obs.push_back({2, 0.5, 1.0, 0});
    obs.push_back({3, mean_edge3, 1.0, 1});
    obs.push_back({4, 0.5, 1.0, 1});
    policy.observe(obs);
    return policy.pick_path();
  };
  CHECK(seeded(0.1) == 1);  // cheaper second path preferred
  CHECK(seeded(0.5) == 0);  // tie goes back to the first
  CHECK(seeded(0.9) == 0);  // dearer second path never promoted
}

TEST_CASE("ucb suboptimal plays grow logarithmically") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.2, 0.2, 0.3, 0.3});
  CombUcbPolicy policy(paths);
  RngStream rng(3);
  RngStream env(4);
  const int horizon = 100000;
  std::vector<int> checkpoints{100, 1000, 10000, 100000};
  std::vector<double> counts;
  long long suboptimal = 0;
  std::size_t next = 0;
  for (int t = 1; t <= horizon; ++t) {
    SelectResult sel;
    policy_step(policy, gen_stochastic(spec, env), rng, &sel);
    if (sel.chosen_index == 1) ++suboptimal;
    if (next < checkpoints.size() && t == checkpoints[next]) {
      counts.push_back(static_cast<double>(suboptimal));
      ++next;
    }
  }
  // Least-squares fit of counts against ln t; demand a strong linear fit.
  std::vector<double> xs;
  for (int c : checkpoints) xs.push_back(std::log(static_cast<double>(c)));
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += counts[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * counts[i];
    syy += counts[i] * counts[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r_num = n * sxy - sx * sy;
  const double r_den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  const double r2 = (r_num / r_den) * (r_num / r_den);
  CHECK(slope > 0.0);
  CHECK(r2 > 0.9);
  // Far below linear growth.
  CHECK(suboptimal < horizon / 10);
}

TEST_CASE("expected-best comparator plays the smaller mean sum forever") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  OraclePolicy oracle =
      OraclePolicy::expected_best(paths, {0.0, 0.2, 0.2, 0.3, 0.3});
  CHECK(oracle.fixed_index() == 0);
  RngStream rng(1);
  for (int t = 1; t <= 5; ++t) {
    CHECK(oracle.select(rng).chosen_index == 0);
  }
}

TEST_CASE("hindsight comparator picks the better-in-hindsight path") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  // Path 1 looks bad early but wins in hindsight.
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < 10; ++t) rows.push_back({0.0, 0.0, 1.0, 1.0});
  for (int t = 0; t < 30; ++t) rows.push_back({1.0, 1.0, 0.0, 0.0});
  auto model = make_oblivious_model(ObliviousSchedule::from_table(rows));
  RngStream env(1);
  OraclePolicy oracle = OraclePolicy::hindsight_best(paths, *model, 40, env);
  CHECK(oracle.fixed_index() == 1);
}

TEST_CASE("hindsight comparator on a mixed regime uses the realized table") {
  const Dag dag = two_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  MixedSpec spec;
  spec.stochastic = StochasticSpec::make({0.0, 0.5, 0.5, 0.5, 0.5});
  spec.attacked = {1};
  spec.oblivious = ObliviousSchedule::constant(4, 1.0);
  auto model = make_mixed_model(std::move(spec));
  RngStream env_a(31);
  RngStream env_b(31);
  OraclePolicy oracle = OraclePolicy::hindsight_best(paths, *model, 200, env_a);
  // Replay the identical realization and find the best fixed path by hand.
  History window(1);
  std::vector<double> cum(5, 0.0);
  for (int t = 1; t <= 200; ++t) {
    const LossVector v = model->losses(t, window, env_b);
    for (EdgeId e = 1; e <= 4; ++e) cum[static_cast<std::size_t>(e)] += v[static_cast<std::size_t>(e)];
  }
  const int expected = (cum[1] + cum[2] <= cum[3] + cum[4]) ? 0 : 1;
  CHECK(oracle.fixed_index() == expected);
}
