#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hamppo/baselines.hpp"
#include "hamppo/field_env.hpp"
#include "hamppo/policy.hpp"
#include "hamppo/scenario.hpp"

namespace hamppo {

std::string to_string(const HierAction& action);

struct TrajectoryStep {
  int index = 0;
  HierAction action;
  Cell position;  // after the action
  RewardBreakdown reward;
  int battery_after = 0;
};

struct EpisodeSummary {
  int infected_total = 0;
  int infected_sprayed = 0;
  int healthy_sprayed = 0;
  int sprays = 0;
  int steps_used = 0;  // timesteps consumed, not action count
  double total_reward = 0.0;
  std::array<int, 3> recovered_by_level{};
};

struct EpisodeTrajectory {
  std::vector<TrajectoryStep> steps;
  EpisodeSummary summary;
};

// A policy the rollout driver can run: picks a mask-valid action from the
// environment view, and prices its own probability of spraying a freshly
// entered cell for the scouting reward. Implementations are stateless per
// call and safe to share across threads.
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  virtual std::string name() const = 0;
  virtual HierAction act(const FieldEnv& env, const Observation& obs, Rng& rng) const = 0;
  virtual double spray_hint(const Observation& post_move_obs,
                            const FieldGeometry& geometry) const = 0;
};

struct PolicyAssets {
  const ActorCritic* net = nullptr;  // required by ham-ppo and lawnmower-optimal
  FieldGeometry geometry;
  double reactive_flip = 0.15;
  bool stochastic = false;  // ham-ppo: sample instead of argmax
  double mask_constant = kDefaultMaskConstant;
};

// Known names: ham-ppo, lawnmower-optimal, reactive, carpet, random.
std::unique_ptr<EpisodePolicy> make_policy(const std::string& name, const PolicyAssets& assets);
std::vector<std::string> known_policy_names();

EpisodeTrajectory run_episode(const EpisodePolicy& policy, const ScenarioConfig& scenario,
                              const RewardParams& rewards, std::uint64_t seed);

void write_trajectory_jsonl(const EpisodeTrajectory& trajectory, const std::string& path);

// Share of the initially infected cells that were sprayed; undefined on a
// clean field.
std::optional<double> yield_recovered_pct(const EpisodeSummary& summary);

// Recovered value in dollars: attainable yield of each recovered cell times
// unit yield and price, optionally rescaled to a reference field size.
double yield_recovered_dollars(const EpisodeSummary& summary, const RewardParams& params,
                               double field_scale = 1.0);

double pesticide_cost(const EpisodeSummary& summary, const RewardParams& params,
                      double area_acres);

struct EvalSettings {
  int seeds = 5;
  std::uint64_t base_seed = 1;
  // Cost divisor in acres; < 0 derives it from the grid (100 sq ft per cell).
  double area_acres = -1.0;
  bool per_field = false;  // report raw field cost instead of per-acre

  double resolved_area(const FieldGeometry& geometry) const;
};

struct MetricsRow {
  std::string policy;
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::optional<double> yield_pct;
  double yield_dollars = 0.0;
  double pesticide_cost = 0.0;
  int steps_used = 0;
  int sprays = 0;
  int infected_total = 0;
  std::string error;  // non-empty when the cell failed
};

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

struct MetricsAggregate {
  std::string policy;
  std::string scenario_id;
  MetricStat yield_pct, yield_dollars, pesticide_cost;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::vector<MetricsAggregate> aggregates() const;
  std::string to_csv() const;
  std::string aggregates_to_json() const;
};

// Full cross product of policies x scenarios x seeds. Failures are recorded
// in their row and the sweep continues. Cells are independent; `workers`
// caps the parallelism (row order is fixed regardless).
MetricsReport sweep(const std::vector<const EpisodePolicy*>& policies,
                    const std::vector<ScenarioConfig>& scenarios, const RewardParams& rewards,
                    const EvalSettings& settings, int workers = 1);

// Evaluates one policy on a scenario under each noise setting of both
// families, plus the noise-free reference.
struct NoiseSweepPoint {
  std::string series;  // "gaussian", "flip" or "none"
  double level = 0.0;
  MetricStat yield_pct, pesticide_cost;
};

struct NoiseSweepResult {
  std::vector<NoiseSweepPoint> points;
  MetricsReport report;
  std::string plot_csv(const std::string& metric) const;  // series,x,y triples
};

NoiseSweepResult noise_sweep(const EpisodePolicy& policy, const ScenarioConfig& scenario,
                             const RewardParams& rewards, const std::vector<double>& sigmas,
                             const std::vector<double>& flips, const EvalSettings& settings,
                             int workers = 1);

}  // namespace hamppo
