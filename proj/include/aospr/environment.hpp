#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aospr/graph.hpp"
#include "aospr/rng.hpp"

namespace aospr {

// Per-edge losses for one round, size n+1, entries in [0,1].
using LossVector = std::vector<double>;

enum class Regime { kStochastic, kOblivious, kAdaptive, kMixed, kContaminated };

// Sliding window of the most recent chosen paths (newest last); capacity
// theta+1 for a theta-memory adversary.
class History {
 public:
  explicit History(int capacity) : capacity_(capacity) {}
  void push(const std::vector<EdgeId>& path);
  int size() const { return static_cast<int>(window_.size()); }
  const std::vector<EdgeId>& entry(int i) const { return window_[static_cast<std::size_t>(i)]; }

 private:
  int capacity_;
  std::deque<std::vector<EdgeId>> window_;
};

enum class StochasticKind { kBernoulli, kUniform };

// I.i.d. per-edge losses with known means; gaps derived at construction.
struct StochasticSpec {
  std::vector<double> mu;  // size n+1
  StochasticKind kind = StochasticKind::kBernoulli;

  std::vector<double> gap;  // Delta(e) = mu(e) - mu(e*)
  double min_gap = 0.0;     // Delta_e, min over positive gaps (0 if none)
  EdgeId best_edge = 0;

  static StochasticSpec make(std::vector<double> mu,
                             StochasticKind kind = StochasticKind::kBernoulli);
  int edge_count() const { return static_cast<int>(mu.size()) - 1; }
};

LossVector gen_stochastic(const StochasticSpec& spec, RngStream& rng);

// Loss rule fixed before the run; must not read the policy's history.
class ObliviousSchedule {
 public:
  virtual ~ObliviousSchedule() = default;
  virtual double loss(int t, EdgeId e) const = 0;
  virtual int edge_count() const = 0;

  static std::unique_ptr<ObliviousSchedule> constant(int n, double value);
  static std::unique_ptr<ObliviousSchedule> alternating(int n);
  // Rotates a high loss across edge groups: group(e) = (e-1) % groups is
  // attacked during block floor((t-1)/period) % groups.
  static std::unique_ptr<ObliviousSchedule> periodic_blocks(int n, int period,
                                                            int groups, double high,
                                                            double low);
  // Table pre-generated from its own seed at construction.
  static std::unique_ptr<ObliviousSchedule> random_table(int n, int rounds,
                                                         std::uint64_t seed,
                                                         double lo, double hi);
  // rows = rounds, columns = edge ids; defined for t <= rows.
  static std::unique_ptr<ObliviousSchedule> from_table(std::vector<std::vector<double>> rows);
  static std::unique_ptr<ObliviousSchedule> from_csv(const std::string& file, int n);
};

// Validates the schedule output range; OutOfRange on violation.
LossVector gen_oblivious(const ObliviousSchedule& schedule, int t);

// theta-memory-bounded adaptive attacker. The rule sees exactly the last
// min(t-1, theta+1) chosen paths. Default rule: full loss on every edge of
// the modal recent path, a small baseline elsewhere.
struct AdaptiveAttacker {
  int theta = 0;
  double attack_loss = 1.0;
  double baseline_loss = 0.1;
  // Optional custom rule: (window, n) -> LossVector.
  std::function<LossVector(const History&, int)> rule;

  int window_size() const { return theta + 1; }
};

LossVector gen_adaptive(const AdaptiveAttacker& attacker, const History& window, int n);

// Stochastic losses outside the attacked edge set E_a, adversary inside.
struct MixedSpec {
  StochasticSpec stochastic;
  std::vector<EdgeId> attacked;  // E_a
  std::shared_ptr<ObliviousSchedule> oblivious;  // exactly one adversary set
  std::optional<AdaptiveAttacker> adaptive;
};

LossVector gen_mixed(const MixedSpec& spec, int t, const History& window, RngStream& rng);

// Budget-limited adversarial overwrites of an i.i.d. base process. Locations
// (t,e) are fixed at construction; for every t > onset the cumulative count
// per suboptimal edge stays <= t * Delta(e) * zeta (best edges: Delta_e).
class ContaminatedSpec {
 public:
  // Greedy placement at the given density in (0,1] of the full budget,
  // stopping after `until` (0 = no limit). Value at a contaminated location
  // is 1 - draw (the misleading flip).
  static ContaminatedSpec make(StochasticSpec base, double zeta, int onset,
                               int until = 0, double density = 1.0);
  // Explicit locations; BudgetViolation if any prefix budget is exceeded.
  static ContaminatedSpec with_locations(StochasticSpec base, double zeta, int onset,
                                         std::vector<std::vector<int>> rounds_per_edge);

  const StochasticSpec& base() const { return base_; }
  double zeta() const { return zeta_; }
  int onset() const { return onset_; }
  bool contaminated_at(int t, EdgeId e) const;
  // Number of locations for e up to and including round t.
  int locations_up_to(int t, EdgeId e) const;

 private:
  StochasticSpec base_;
  double zeta_ = 0.0;
  int onset_ = 0;
  std::vector<std::vector<int>> rounds_per_edge_;  // ascending per edge, size n+1
  void validate_budget() const;
};

LossVector gen_contaminated(const ContaminatedSpec& spec, int t, RngStream& rng);

// Round-by-round generator facade the harness drives. Implementations own
// no RNG; the per-repetition environment stream is passed in.
class LossModel {
 public:
  virtual ~LossModel() = default;
  virtual int edge_count() const = 0;
  virtual Regime regime() const = 0;
  virtual int history_window() const { return 0; }
  virtual LossVector losses(int t, const History& history, RngStream& rng) const = 0;
};

std::unique_ptr<LossModel> make_stochastic_model(StochasticSpec spec);
std::unique_ptr<LossModel> make_oblivious_model(std::shared_ptr<ObliviousSchedule> schedule);
std::unique_ptr<LossModel> make_adaptive_model(AdaptiveAttacker attacker, int n);
std::unique_ptr<LossModel> make_mixed_model(MixedSpec spec);
std::unique_ptr<LossModel> make_contaminated_model(ContaminatedSpec spec);

// Asserted on every generated vector.
void check_loss_range(const LossVector& losses);

}  // namespace aospr
