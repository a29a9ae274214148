#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "aospr/baselines.hpp"
#include "aospr/environment.hpp"
#include "aospr/graph.hpp"
#include "aospr/policy.hpp"
#include "aospr/probing.hpp"
#include "aospr/wrappers.hpp"

using namespace aospr;

namespace {

Dag three_chains() {
  return build_dag({{0, 2}, {2, 1}, {0, 3}, {3, 1}, {0, 4}, {4, 1}}, 0, 1);
}

Dag parallel_edges(int count) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < count; ++i) edges.emplace_back(0, 1);
  return build_dag(edges, 0, 1);
}

// Records everything it is told; select emits divisor = emission round.
class ProbePolicy : public Policy {
 public:
  explicit ProbePolicy(int n) : n_(n) {}
  std::string name() const override { return "probe"; }
  int edge_count() const override { return n_; }
  SelectResult select(RngStream&) override {
    ++t_;
    SelectResult sel;
    sel.t = t_;
    sel.chosen = {1};
    sel.probed_edges = {1};
    sel.divisor.assign(static_cast<std::size_t>(n_) + 1, 0.0);
    sel.divisor[1] = static_cast<double>(t_);
    return sel;
  }
  void observe(const std::vector<Observation>& observations) override {
    for (const Observation& obs : observations) seen.push_back(obs);
  }
  std::vector<Observation> seen;

 private:
  int n_;
  int t_ = 0;
};

}  // namespace

TEST_CASE("probed path probability: direct formula values") {
  CHECK(probed_path_prob(0.2, 3, 6) == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(probed_path_prob(0.37, 1, 6) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(probed_path_prob(0.37, 6, 6) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("probed link probability: direct formula values") {
  CHECK(probed_link_prob(0.3, 2, 5) == doctest::Approx(0.475).epsilon(1e-12));
  CHECK(probed_link_prob(0.3, 1, 5) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(probed_link_prob(0.3, 5, 5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("probed link probability rejects values outside (0,1]") {
  CHECK_THROWS_AS(probed_link_prob(0.0, 1, 5), ProbabilityOutOfRange);
  CHECK_THROWS_AS(probed_link_prob(0.1, 0, 5), ProbabilityOutOfRange);
}

TEST_CASE("probing probabilities are monotone in the budget") {
  double prev = 0.0;
  for (int m = 1; m <= 6; ++m) {
    const double q = probed_link_prob(0.25, m, 6);
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("a unit budget probes only the chosen path") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  RngStream rng(1);
  const ProbePlan plan = make_probe_plan(2, paths, 1, rng);
  CHECK(plan.probed_paths == std::vector<int>{2});
  CHECK(plan.probed_edges == std::vector<EdgeId>{5, 6});
  CHECK(plan.probed_edge_count == 2);
}

TEST_CASE("a full budget probes everything") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  RngStream rng(2);
  const ProbePlan plan = make_probe_plan(0, paths, 3, rng);
  CHECK(plan.probed_paths == std::vector<int>{0, 1, 2});
  CHECK(plan.probed_edge_count == 6);
}

TEST_CASE("budgets beyond the path count are rejected") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  RngStream rng(3);
  CHECK_THROWS_AS(make_probe_plan(0, paths, 4, rng), BudgetTooLarge);
}

TEST_CASE("extra probes land uniformly on the other paths") {
  const Dag dag = parallel_edges(6);
  const PathSet paths = enumerate_paths(dag, 10);
  RngStream rng(44);
  const int draws = 100000;
  std::vector<int> hits(static_cast<std::size_t>(paths.size()), 0);
  for (int d = 0; d < draws; ++d) {
    const ProbePlan plan = make_probe_plan(0, paths, 3, rng);
    for (int i : plan.probed_paths) {
      if (i != 0) ++hits[static_cast<std::size_t>(i)];
    }
  }
  // Each non-chosen path included with probability (M-1)/(N-1) = 2/5.
  const double p = 2.0 / 5.0;
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  for (int i = 1; i < paths.size(); ++i) {
    CHECK(std::abs(hits[static_cast<std::size_t>(i)] - draws * p) <= 3.0 * sigma);
  }
}

TEST_CASE("auto batch size frozen value") {
  CHECK(minibatch_auto_size(2, 6, 1000000) == 34);
  CHECK(minibatch_auto_size(2, 6, 1) == 1);
}

TEST_CASE("cold-start monitor finds the first full-coverage round") {
  CHECK(coldstart_monitor({{1}, {2, 3}, {1, 2}}, 3) == 2);
  CHECK(coldstart_monitor({{1}, {2}}, 3) == -1);
  CHECK(coldstart_monitor({{1, 2, 3}}, 3) == 1);
}

TEST_CASE("uniform single-path probing on disjoint paths is coupon collecting") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  RngStream rng(555);
  const int reps = 10000;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    total += coldstart_cover_time(paths, 1, rng);
  }
  const double mean = total / reps;
  // 3 (1 + 1/2 + 1/3) = 5.5, std 2.598, three sigma of the mean:
  const double tol = 3.0 * 2.598 / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean - 5.5) <= tol);
}

TEST_CASE("kappa feasible counts: pinned example") {
  // Pair 0 covers {1,2} (k=2); pair 1 covers {1,2,3,4} (k=4).
  std::vector<std::vector<char>> cover{
      {0, 1, 1, 0, 0},
      {0, 1, 1, 1, 1},
  };
  const MultiSourceSpec spec =
      MultiSourceSpec::make(cover, MultiSourceSpec::Mode::kUncoordinated);
  CHECK(spec.subset_size == std::vector<int>{2, 4});
  CHECK(kappa_edge(spec, 1, 8) == 6);  // floor(8/2) + floor(8/4)
  CHECK(kappa_lower(spec, 8) == 2);    // edges 3 and 4 see only pair 1
}

TEST_CASE("effective probing rate: complete overlap gives the pair count") {
  std::vector<std::vector<char>> cover{
      {0, 1, 1, 1, 1},
      {0, 1, 1, 1, 1},
      {0, 1, 1, 1, 1},
  };
  const MultiSourceSpec spec =
      MultiSourceSpec::make(cover, MultiSourceSpec::Mode::kCoordinated);
  CHECK(kappa_bar(spec, 8) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("effective probing rate: disjoint covers give one") {
  std::vector<std::vector<char>> cover{
      {0, 1, 1, 0, 0, 0, 0},
      {0, 0, 0, 1, 1, 1, 1},
  };
  const MultiSourceSpec spec =
      MultiSourceSpec::make(cover, MultiSourceSpec::Mode::kUncoordinated);
  CHECK(kappa_bar(spec, 8) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uncoverable edges are rejected") {
  std::vector<std::vector<char>> cover{
      {0, 1, 0, 1},
      {0, 1, 0, 0},
  };
  CHECK_THROWS_AS(MultiSourceSpec::make(cover, MultiSourceSpec::Mode::kCoordinated),
                  InfeasibleCover);
}

TEST_CASE("uncoordinated scheduling round-robins each pair's subset") {
  std::vector<std::vector<char>> cover{
      {0, 1, 1, 0, 0},
      {0, 0, 0, 1, 1},
  };
  MultiSourceScheduler scheduler(
      MultiSourceSpec::make(cover, MultiSourceSpec::Mode::kUncoordinated));
  for (int t = 0; t < 10; ++t) scheduler.next_round();
  for (EdgeId e = 1; e <= 4; ++e) CHECK(scheduler.probe_count(e) == 5);
}

TEST_CASE("coordinated scheduling maximizes fresh coverage each round") {
  std::vector<std::vector<char>> cover{
      {0, 1, 1, 1},
      {0, 1, 1, 1},
  };
  MultiSourceScheduler scheduler(
      MultiSourceSpec::make(cover, MultiSourceSpec::Mode::kCoordinated));
  const std::vector<EdgeId> first = scheduler.next_round();
  CHECK(first.size() == 2);
  CHECK(first[0] != first[1]);  // the second pair avoids the probed edge
}

TEST_CASE("zero delay reproduces the unwrapped trajectory bit-exactly") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 50);
  const CoveringSet cover = covering_set(paths);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.2, 0.2, 0.5, 0.5, 0.8, 0.8});

  EnumeratedSpace space_a(paths, cover);
  AosprPolicy plain(space_a, Schedules{});
  EnumeratedSpace space_b(paths, cover);
  AosprPolicy inner(space_b, Schedules{});
  DelayedFeedback wrapped(inner, DelayRule::constant(0), 999);

  RngStream rng_a(101), env_a(201);
  RngStream rng_b(101), env_b(201);
  for (int t = 1; t <= 300; ++t) {
    SelectResult sa, sb;
    policy_step(plain, gen_stochastic(spec, env_a), rng_a, &sa);
    policy_step(wrapped, gen_stochastic(spec, env_b), rng_b, &sb);
    REQUIRE(sa.chosen == sb.chosen);
  }
  CHECK(plain.state() == inner.state());
  CHECK(wrapped.pending() == 0);
}

TEST_CASE("constant delay leaves exactly the last emissions queued") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 50);
  const CoveringSet cover = covering_set(paths);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.2, 0.2, 0.5, 0.5, 0.8, 0.8});
  EnumeratedSpace space(paths, cover);
  AosprPolicy inner(space, Schedules{});
  DelayedFeedback wrapped(inner, DelayRule::constant(5), 1);
  RngStream rng(7), env(8);
  for (int t = 1; t <= 100; ++t) {
    policy_step(wrapped, gen_stochastic(spec, env), rng);
  }
  // 5 rounds of 2-edge observations still queued.
  CHECK(wrapped.pending() == 10);
}

TEST_CASE("delivered observations keep their emission-time divisors") {
  ProbePolicy inner(2);
  DelayedFeedback wrapped(inner, DelayRule::constant(2), 3);
  RngStream rng(1);
  for (int t = 1; t <= 6; ++t) {
    const SelectResult sel = wrapped.select(rng);
    std::vector<Observation> obs{{1, 0.5, sel.divisor[1], sel.chosen_index}};
    wrapped.observe(obs);
  }
  // Emissions 1..4 are delivered (at rounds 3..6) carrying divisors 1..4.
  REQUIRE(inner.seen.size() == 4);
  for (std::size_t i = 0; i < inner.seen.size(); ++i) {
    CHECK(inner.seen[i].divisor == doctest::Approx(static_cast<double>(i + 1)));
  }
}

TEST_CASE("geometric delays are nonnegative with the right mean") {
  const auto rule = DelayRule::geometric(5.0);
  RngStream rng(6);
  double total = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const int d = rule->delay(1, i, rng);
    CHECK(d >= 0);
    total += d;
  }
  CHECK(std::abs(total / draws - 5.0) < 0.1);
}

TEST_CASE("per-edge delays address edges individually") {
  const auto rule = DelayRule::per_edge({0, 3, 7});
  RngStream rng(1);
  CHECK(rule->delay(1, 10, rng) == 3);
  CHECK(rule->delay(2, 10, rng) == 7);
}

TEST_CASE("unit batches reproduce the unwrapped trajectory bit-exactly") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 50);
  const CoveringSet cover = covering_set(paths);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.2, 0.2, 0.5, 0.5, 0.8, 0.8});

  EnumeratedSpace space_a(paths, cover);
  AosprPolicy plain(space_a, Schedules{});
  EnumeratedSpace space_b(paths, cover);
  AosprPolicy inner(space_b, Schedules{});
  MiniBatch wrapped(inner, 1);

  RngStream rng_a(11), env_a(21);
  RngStream rng_b(11), env_b(21);
  for (int t = 1; t <= 300; ++t) {
    SelectResult sa, sb;
    policy_step(plain, gen_stochastic(spec, env_a), rng_a, &sa);
    policy_step(wrapped, gen_stochastic(spec, env_b), rng_b, &sb);
    REQUIRE(sa.chosen == sb.chosen);
  }
  CHECK(plain.state() == inner.state());
}

TEST_CASE("batches replay one selection and feed the averaged loss once") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 50);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  AosprPolicy inner(space, Schedules{});
  MiniBatch wrapped(inner, 3);
  RngStream rng(31);

  const SelectResult first = wrapped.select(rng);
  std::vector<EdgeId> fixed = first.chosen;
  // Identical selection until the batch completes; inner t advances once.
  CHECK(inner.state().round() == 1);
  auto observe_with = [&](const SelectResult& sel, double loss) {
    std::vector<Observation> obs;
    for (EdgeId e : sel.probed_edges) {
      obs.push_back({e, loss, sel.divisor[static_cast<std::size_t>(e)],
                     sel.chosen_index});
    }
    wrapped.observe(obs);
  };
  observe_with(first, 0.3);
  CHECK(wrapped.select(rng).chosen == fixed);
  observe_with(first, 0.6);
  CHECK(wrapped.select(rng).chosen == fixed);
  observe_with(first, 0.9);
  // Batch of (0.3, 0.6, 0.9) averages to 0.6 and lands once.
  const double q = first.divisor[static_cast<std::size_t>(fixed[0])];
  CHECK(inner.state().cum_loss(fixed[0]) == doctest::Approx(0.6 / q).epsilon(1e-12));
  // Next select starts a fresh batch.
  wrapped.select(rng);
  CHECK(inner.state().round() == 2);
}

TEST_CASE("constant losses make the batch average equal the per-round loss") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 50);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  AosprPolicy inner(space, Schedules{});
  MiniBatch wrapped(inner, 4);
  RngStream rng(41);
  const auto schedule = ObliviousSchedule::constant(6, 0.7);
  for (int t = 1; t <= 4; ++t) {
    policy_step(wrapped, gen_oblivious(*schedule, t), rng);
  }
  // One inner step: estimate 0.7/q on each chosen edge.
  CHECK(inner.state().round() == 1);
}

TEST_CASE("multi-path probing divisors follow the link mixing formula") {
  const Dag dag = parallel_edges(6);
  const PathSet paths = enumerate_paths(dag, 10);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  ProbeSettings probe;
  probe.budget = 4;
  AosprPolicy policy(space, Schedules{}, probe);
  RngStream rng(3);
  const std::vector<double> marginals = policy.next_marginals();
  const SelectResult sel = policy.select(rng);
  CHECK(static_cast<int>(sel.probed_paths.size()) == 4);
  CHECK(static_cast<int>(sel.probed_edges.size()) == 4);
  for (EdgeId e : sel.probed_edges) {
    const double expect = probed_link_prob(marginals[static_cast<std::size_t>(e)], 4, 6);
    CHECK(sel.divisor[static_cast<std::size_t>(e)] ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  // Path-level diagnostics follow the path mixing formula.
  for (std::size_t i = 0; i < sel.probed_paths.size(); ++i) {
    CHECK(sel.probed_path_probs[i] > 0.0);
    CHECK(sel.probed_path_probs[i] <= 1.0);
  }
}

TEST_CASE("multi-path estimates stay exactly unbiased on single-edge paths") {
  // Paths and edges coincide, so the link formula is the exact inclusion
  // probability; exact summation over (chosen, extra-probe) recovers the
  // loss.
  const Dag dag = parallel_edges(5);
  const PathSet paths = enumerate_paths(dag, 10);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  ProbeSettings probe;
  probe.budget = 3;
  AosprPolicy policy(space, Schedules{}, probe);
  const std::vector<double> rho = policy.next_distribution();
  const std::vector<double> marginals = policy.next_marginals();
  const int N = paths.size();
  const std::vector<double> loss{0.0, 0.9, 0.1, 0.5, 0.7, 0.3};
  // Enumerate chosen path h and extra-probe subsets S of size M-1.
  for (EdgeId e = 1; e <= 5; ++e) {
    const double q = probed_link_prob(marginals[static_cast<std::size_t>(e)], 3, 5);
    double expect = 0.0;
    for (int h = 0; h < N; ++h) {
      // P(e observed | h) = 1 if e on h else (M-1)/(N-1) by symmetry.
      const double p_obs =
          paths.path(h).contains(e) ? 1.0 : (3.0 - 1.0) / (N - 1.0);
      expect += rho[static_cast<std::size_t>(h)] * p_obs *
                loss[static_cast<std::size_t>(e)] / q;
    }
    CHECK(expect == doctest::Approx(loss[static_cast<std::size_t>(e)]).epsilon(1e-12));
  }
}

TEST_CASE("link-formula bias on overlapping paths is small and quantified") {
  // On general instances the link mixing formula approximates the true
  // inclusion probability; the exact-inclusion route stays unbiased.
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 10);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  ProbeSettings probe;
  probe.budget = 2;
  AosprPolicy policy(space, Schedules{}, probe);
  const std::vector<double> rho = policy.next_distribution();
  const std::vector<double> marginals = policy.next_marginals();
  const int N = paths.size();
  for (EdgeId e = 1; e <= 6; ++e) {
    // True inclusion probability by exact summation.
    double inclusion = 0.0;
    for (int h = 0; h < N; ++h) {
      const double p_obs = paths.path(h).contains(e) ? 1.0 : 1.0 / (N - 1.0);
      inclusion += rho[static_cast<std::size_t>(h)] * p_obs;
    }
    // At the uniform start: inclusion = 1/3 + (2/3)(1/2) = 2/3 while the
    // mixing formula gives 1/3 + (2/3)(1/5) = 7/15.
    CHECK(inclusion == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    const double q = probed_link_prob(marginals[static_cast<std::size_t>(e)],
                                      2.0, 6.0);
    CHECK(inclusion / q == doctest::Approx(10.0 / 7.0).epsilon(1e-9));
  }
}

TEST_CASE("count perturbations shift the divisors, not the environment") {
  const Dag dag = parallel_edges(6);
  const PathSet paths = enumerate_paths(dag, 10);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  ProbeSettings plain;
  plain.budget = 4;
  ProbeSettings shifted = plain;
  shifted.m_delta = 1.0;
  AosprPolicy a(space, Schedules{}, plain);
  AosprPolicy b(space, Schedules{}, shifted);
  RngStream rng_a(5), rng_b(5);
  const SelectResult sa = a.select(rng_a);
  const SelectResult sb = b.select(rng_b);
  CHECK(sa.chosen == sb.chosen);  // same stream, same draw
  for (EdgeId e : sa.probed_edges) {
    CHECK(sb.divisor[static_cast<std::size_t>(e)] >
          sa.divisor[static_cast<std::size_t>(e)]);
  }
}

TEST_CASE("perturbations that break the probability range are rejected") {
  const Dag dag = parallel_edges(6);
  const PathSet paths = enumerate_paths(dag, 10);
  const CoveringSet cover = covering_set(paths);
  EnumeratedSpace space(paths, cover);
  ProbeSettings probe;
  probe.budget = 4;
  probe.m_delta = -4.0;  // mixing term goes negative enough to break (0,1]
  AosprPolicy policy(space, Schedules{}, probe);
  RngStream rng(6);
  CHECK_THROWS_AS(policy.select(rng), ProbabilityOutOfRange);
}

TEST_CASE("delayed stochastic feedback costs an additive, fading excess") {
  const Dag dag = three_chains();
  const PathSet paths = enumerate_paths(dag, 50);
  const CoveringSet cover = covering_set(paths);
  const StochasticSpec spec = StochasticSpec::make({0.0, 0.1, 0.1, 0.3, 0.3, 0.5, 0.5});
  const int horizon = 20000;
  const int reps = 8;
  double plain_half = 0.0, plain_full = 0.0;
  double delayed_half = 0.0, delayed_full = 0.0;
  const double comparator = 0.2;
  for (int r = 0; r < reps; ++r) {
    for (int variant = 0; variant < 2; ++variant) {
      EnumeratedSpace space(paths, cover);
      AosprPolicy inner(space, Schedules{});
      std::unique_ptr<DelayedFeedback> wrapper;
      Policy* top = &inner;
      if (variant == 1) {
        wrapper = std::make_unique<DelayedFeedback>(inner, DelayRule::constant(20),
                                                    900 + r);
        top = wrapper.get();
      }
      RngStream rng(derive_seed(1000 + r, 1));
      RngStream env(derive_seed(1000 + r, 2));
      double pseudo = 0.0;
      for (int t = 1; t <= horizon; ++t) {
        SelectResult sel;
        policy_step(*top, gen_stochastic(spec, env), rng, &sel);
        double mu = 0.0;
        for (EdgeId e : sel.chosen) mu += spec.mu[static_cast<std::size_t>(e)];
        pseudo += mu - comparator;
        if (t == horizon / 2) {
          (variant == 0 ? plain_half : delayed_half) += pseudo / reps;
        }
      }
      (variant == 0 ? plain_full : delayed_full) += pseudo / reps;
    }
  }
  const double excess_half = delayed_half - plain_half;
  const double excess_full = delayed_full - plain_full;
  // Additive effect: the excess grows much slower than the regret itself.
  CHECK(excess_full < plain_full);
  CHECK(excess_full - excess_half < plain_full - plain_half);
}
