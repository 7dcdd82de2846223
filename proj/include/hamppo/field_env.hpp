#pragma once

#include <array>
#include <functional>

#include "hamppo/action_tree.hpp"
#include "hamppo/grid.hpp"
#include "hamppo/rng.hpp"
#include "hamppo/scenario.hpp"

namespace hamppo {

// Fraction of the yield still attainable after t_inf days of infection, for a
// crop losing half its yield t50 days in: a logistic decay in t_inf + t50.
double attainable_yield_fraction(double t_inf, double t50);

// Severity-weighted unrecoverable fraction.
double yield_loss(double eta_y, double p_inf);

struct RewardParams {
  double uay = 10.0;        // unit attainable yield, bushels per cell
  double ppb = 1.0;         // price per bushel
  double upp = 0.05;        // unit pesticide price per spray
  double kappa_rev = 5.0;   // penalty for revisiting a scouted healthy cell
  double t50 = 3.0;         // days to 50% yield loss

  struct LevelParams {
    double t_inf;   // infection duration in days
    double p_inf;   // normalized severity in [0, 1]
  };
  std::array<LevelParams, 3> levels{{{1.0, 0.33}, {2.0, 0.66}, {4.0, 1.0}}};

  void validate() const;
  const LevelParams& level(Health h) const;
  double eta_y(Health h) const;

  bool operator==(const RewardParams&) const = default;
};

enum class RewardComponent {
  None,
  ScoutInfected,
  RevisitHealthy,
  SprayInfected,
  NoSprayInfected,
  SprayHealthy,
};

struct TaggedReward {
  double value = 0.0;
  RewardComponent component = RewardComponent::None;
};

// Reward for a scout move, decided by the entered cell: potential recovery
// value weighted by the caller's probability of spraying next on a fresh
// infected cell, the revisit penalty on a previously visited healthy cell,
// zero otherwise.
TaggedReward reward_scout(Health dest_health, bool dest_visited, double spray_prob_hint,
                          const RewardParams& params);

// Reward for a deep scout on the current cell: recovery value minus pesticide
// price when spraying an infected cell, the forgone-yield penalty when
// skipping one, the pesticide price when spraying a healthy cell, zero when
// skipping a healthy cell. Deep scouting an empty cell is a contract error.
TaggedReward reward_deep_scout(Health cell_health, bool spray, const RewardParams& params);

// One slot per reward component; at most one is non-zero per step and the
// step reward is exactly their sum.
struct RewardBreakdown {
  double scout_infected = 0.0;
  double revisit_healthy = 0.0;
  double spray_infected = 0.0;
  double nospray_infected = 0.0;
  double spray_healthy = 0.0;

  double total() const {
    return scout_infected + revisit_healthy + spray_infected + nospray_infected + spray_healthy;
  }
  void set(RewardComponent component, double value);
};

struct FieldState {
  FieldGeometry geometry;
  Grid<Health> health;        // full grid including headland rows
  Cell position;
  Grid<std::uint8_t> visited;
  Grid<std::uint8_t> sprayed;
  int battery_remaining = 0;
  int battery_budget = 0;
  long long spray_charges_remaining = kUnlimitedCharges;
  int step_count = 0;
};

// What the policy sees: a noisy infection belief (exact on visited cells),
// the exact visitation/spray histories, the agent position and the remaining
// battery fraction.
struct Observation {
  Grid<double> belief;
  Grid<std::uint8_t> visited;
  Grid<std::uint8_t> sprayed;
  Cell position;
  double battery_fraction = 0.0;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  RewardBreakdown info;
  int battery_spent = 0;
};

// Exact belief encoding of a visited cell: 0 for healthy/empty, level/3 for
// infected.
double belief_encoding(Health h);

// Deterministic, seedable grid-field episode: row-constrained movement,
// timestep battery accounting, spray bookkeeping and noisy observations.
// Instances are independent; one instance is single-threaded.
class FieldEnv {
 public:
  static constexpr int kScoutDuration = 1;
  static constexpr int kDeepScoutDuration = 5;
  // Sub-stream tags of the episode seed: the infection map is drawn from
  // Rng::derive(seed, kMapStream) and observation noise from
  // Rng::derive(seed, kNoiseStream).
  static constexpr std::uint64_t kMapStream = 1;
  static constexpr std::uint64_t kNoiseStream = 2;

  FieldEnv(ScenarioConfig scenario, RewardParams rewards);

  Observation reset(std::uint64_t seed);

  // The hint is the caller's probability of spraying the entered cell on the
  // following action; it only scales the fresh-infected scout reward.
  StepOutcome step(const HierAction& action, double spray_prob_hint);

  // Variant for callers that need the post-move observation to price the
  // hint (e.g. a policy evaluating itself at the destination). The provider
  // is invoked only when the hint can affect the reward.
  using SprayHintFn = std::function<double(const Observation&)>;
  StepOutcome step(const HierAction& action, const SprayHintFn& hint);

  // Draws fresh noise for unvisited cells from the episode noise stream.
  Observation observe();

  ActionMask masks() const;
  const FieldState& state() const { return state_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const RewardParams& rewards() const { return rewards_; }
  bool done() const { return done_; }
  int timesteps_consumed() const { return consumed_; }
  int infected_total() const { return infected_total_; }

 private:
  ScenarioConfig scenario_;
  RewardParams rewards_;
  FieldState state_;
  Rng noise_rng_;
  bool done_ = true;
  int consumed_ = 0;
  int max_actions_ = 0;
  int infected_total_ = 0;
};

}  // namespace hamppo
