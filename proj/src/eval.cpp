#include "hamppo/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hamppo {
namespace {

constexpr std::uint64_t kPolicyStream = 11;
constexpr double kSquareFeetPerCell = 100.0;
constexpr double kSquareFeetPerAcre = 43560.0;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

MetricStat stat_of(const std::vector<double>& values) {
  MetricStat stat;
  stat.n = static_cast<int>(values.size());
  if (values.empty()) return stat;
  double sum = 0.0;
  for (const double v : values) sum += v;
  stat.mean = sum / stat.n;
  if (stat.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.stddev = std::sqrt(ss / (stat.n - 1));
  }
  return stat;
}

class HamPpoPolicy final : public EpisodePolicy {
 public:
  HamPpoPolicy(PolicyAssets assets)
      : net_(*assets.net), encoder_(assets.geometry), stochastic_(assets.stochastic),
        mask_constant_(assets.mask_constant) {}

  std::string name() const override { return "ham-ppo"; }

  HierAction act(const FieldEnv& env, const Observation& obs, Rng& rng) const override {
    const Eigen::VectorXd x = encoder_.encode(obs);
    const ActionMask mask = env.masks();
    if (stochastic_) return act_sample(net_, x, mask, mask_constant_, rng).action;
    return act_greedy(net_, x, mask);
  }

  double spray_hint(const Observation& post, const FieldGeometry& geometry) const override {
    const ActionMask mask =
        compute_masks(geometry, post.position, post.sprayed.at(post.position) != 0);
    return spray_hint_probability(net_, encoder_.encode(post), mask, mask_constant_);
  }

 private:
  ActorCritic net_;
  ObsEncoder encoder_;
  bool stochastic_;
  double mask_constant_;
};

class LawnmowerOptimalPolicy final : public EpisodePolicy {
 public:
  LawnmowerOptimalPolicy(PolicyAssets assets)
      : net_(*assets.net), encoder_(assets.geometry), mask_constant_(assets.mask_constant) {}

  std::string name() const override { return "lawnmower-optimal"; }

  HierAction act(const FieldEnv& env, const Observation& obs, Rng&) const override {
    return optimal_spray_decide(env.scenario().geometry, obs, net_, encoder_, mask_constant_);
  }

  double spray_hint(const Observation& post, const FieldGeometry& geometry) const override {
    const ActionMask mask =
        compute_masks(geometry, post.position, post.sprayed.at(post.position) != 0);
    const double p =
        conditional_spray_probability(net_, encoder_.encode(post), mask, mask_constant_);
    return p > 0.5 ? 1.0 : 0.0;
  }

 private:
  ActorCritic net_;
  ObsEncoder encoder_;
  double mask_constant_;
};

class CarpetPolicy final : public EpisodePolicy {
 public:
  std::string name() const override { return "carpet"; }

  HierAction act(const FieldEnv& env, const Observation&, Rng&) const override {
    const FieldState& state = env.state();
    return carpet_decide(state.geometry, state.position,
                         state.sprayed.at(state.position) != 0);
  }

  double spray_hint(const Observation&, const FieldGeometry&) const override { return 1.0; }
};

class ReactivePolicy final : public EpisodePolicy {
 public:
  explicit ReactivePolicy(double flip_p) : flip_p_(flip_p) {}

  std::string name() const override { return "reactive"; }

  HierAction act(const FieldEnv& env, const Observation&, Rng& rng) const override {
    const FieldState& state = env.state();
    return reactive_decide(state.geometry, state.position, state.health.at(state.position),
                           state.sprayed.at(state.position) != 0, flip_p_, rng);
  }

  double spray_hint(const Observation&, const FieldGeometry&) const override {
    return 1.0 - flip_p_;
  }

 private:
  double flip_p_;
};

class RandomEpisodePolicy final : public EpisodePolicy {
 public:
  std::string name() const override { return "random"; }

  HierAction act(const FieldEnv& env, const Observation&, Rng& rng) const override {
    return random_decide(env.masks(), rng);
  }

  double spray_hint(const Observation&, const FieldGeometry&) const override { return 0.25; }
};

MetricsRow evaluate_cell(const EpisodePolicy& policy, const ScenarioConfig& scenario,
                         const RewardParams& rewards, const EvalSettings& settings,
                         std::uint64_t seed) {
  MetricsRow row;
  row.policy = policy.name();
  row.scenario_id = scenario.id();
  row.seed = seed;
  try {
    const EpisodeTrajectory traj = run_episode(policy, scenario, rewards, seed);
    row.yield_pct = yield_recovered_pct(traj.summary);
    row.yield_dollars = yield_recovered_dollars(traj.summary, rewards);
    const double area = settings.per_field ? 1.0 : settings.resolved_area(scenario.geometry);
    row.pesticide_cost = pesticide_cost(traj.summary, rewards, area);
    row.steps_used = traj.summary.steps_used;
    row.sprays = traj.summary.sprays;
    row.infected_total = traj.summary.infected_total;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

void run_cells(const std::vector<std::function<MetricsRow()>>& cells,
               std::vector<MetricsRow>& rows, int workers) {
  rows.resize(cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = cells[i]();
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      rows[i] = cells[i]();
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(cells.size()));
  pool.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace

std::string to_string(const HierAction& action) {
  if (action.type == ActionType::Scout) {
    switch (action.move()) {
      case Move::Up: return "scout:up";
      case Move::Down: return "scout:down";
      case Move::Left: return "scout:left";
      case Move::Right: return "scout:right";
    }
  }
  return action.spray() ? "deep-scout:spray" : "deep-scout:no-spray";
}

std::unique_ptr<EpisodePolicy> make_policy(const std::string& name, const PolicyAssets& assets) {
  if (name == "ham-ppo" || name == "lawnmower-optimal") {
    if (assets.net == nullptr)
      throw std::invalid_argument("policy '" + name + "' requires a checkpoint");
    if (name == "ham-ppo") return std::make_unique<HamPpoPolicy>(assets);
    return std::make_unique<LawnmowerOptimalPolicy>(assets);
  }
  if (name == "carpet") return std::make_unique<CarpetPolicy>();
  if (name == "reactive") return std::make_unique<ReactivePolicy>(assets.reactive_flip);
  if (name == "random") return std::make_unique<RandomEpisodePolicy>();
  throw std::invalid_argument("unknown policy '" + name + "'");
}

std::vector<std::string> known_policy_names() {
  return {"ham-ppo", "lawnmower-optimal", "reactive", "carpet", "random"};
}

EpisodeTrajectory run_episode(const EpisodePolicy& policy, const ScenarioConfig& scenario,
                              const RewardParams& rewards, std::uint64_t seed) {
  FieldEnv env(scenario, rewards);
  Observation obs = env.reset(seed);
  Rng policy_rng = Rng::derive(seed, kPolicyStream);
  const FieldGeometry geometry = scenario.geometry;

  EpisodeTrajectory traj;
  int index = 0;
  while (!env.done()) {
    const HierAction action = policy.act(env, obs, policy_rng);
    StepOutcome outcome = env.step(
        action, FieldEnv::SprayHintFn(
                    [&](const Observation& post) { return policy.spray_hint(post, geometry); }));
    traj.steps.push_back(
        {index++, action, env.state().position, outcome.info, env.state().battery_remaining});
    traj.summary.total_reward += outcome.reward;
    obs = std::move(outcome.observation);
  }

  const FieldState& state = env.state();
  traj.summary.infected_total = env.infected_total();
  traj.summary.steps_used = env.timesteps_consumed();
  for (int r = 0; r < state.geometry.rows(); ++r) {
    for (int c = 0; c < state.geometry.cols; ++c) {
      if (!state.sprayed.at(r, c)) continue;
      ++traj.summary.sprays;
      const Health h = state.health.at(r, c);
      if (is_infected(h)) {
        ++traj.summary.infected_sprayed;
        ++traj.summary.recovered_by_level[infection_level(h) - 1];
      } else if (h == Health::Healthy) {
        ++traj.summary.healthy_sprayed;
      }
    }
  }
  return traj;
}

void write_trajectory_jsonl(const EpisodeTrajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trajectory file for writing: " + path);
  for (const auto& step : trajectory.steps) {
    nlohmann::ordered_json j;
    j["step"] = step.index;
    j["position"] = {step.position.row, step.position.col};
    j["action"] = to_string(step.action);
    j["reward"] = {{"scout_infected", step.reward.scout_infected},
                   {"revisit_healthy", step.reward.revisit_healthy},
                   {"spray_infected", step.reward.spray_infected},
                   {"nospray_infected", step.reward.nospray_infected},
                   {"spray_healthy", step.reward.spray_healthy},
                   {"total", step.reward.total()}};
    j["battery"] = step.battery_after;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["summary"] = {{"infected_total", trajectory.summary.infected_total},
                        {"infected_sprayed", trajectory.summary.infected_sprayed},
                        {"healthy_sprayed", trajectory.summary.healthy_sprayed},
                        {"sprays", trajectory.summary.sprays},
                        {"steps_used", trajectory.summary.steps_used},
                        {"total_reward", trajectory.summary.total_reward}};
  out << summary.dump() << '\n';
}

std::optional<double> yield_recovered_pct(const EpisodeSummary& summary) {
  if (summary.infected_total <= 0) return std::nullopt;
  return 100.0 * summary.infected_sprayed / summary.infected_total;
}

double yield_recovered_dollars(const EpisodeSummary& summary, const RewardParams& params,
                               double field_scale) {
  params.validate();
  double dollars = 0.0;
  for (int level = 1; level <= 3; ++level) {
    const int count = summary.recovered_by_level[level - 1];
    if (count == 0) continue;
    dollars += count * params.eta_y(infection_from_level(level)) * params.uay * params.ppb;
  }
  return dollars * field_scale;
}

double pesticide_cost(const EpisodeSummary& summary, const RewardParams& params,
                      double area_acres) {
  if (area_acres <= 0.0) throw std::invalid_argument("area must be positive");
  return summary.sprays * params.upp / area_acres;
}

double EvalSettings::resolved_area(const FieldGeometry& geometry) const {
  if (area_acres > 0.0) return area_acres;
  return geometry.interior_cells() * kSquareFeetPerCell / kSquareFeetPerAcre;
}

std::vector<MetricsAggregate> MetricsReport::aggregates() const {
  std::vector<MetricsAggregate> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MetricsAggregate& agg) {
      return agg.policy == row.policy && agg.scenario_id == row.scenario_id;
    });
    if (it == out.end()) {
      out.push_back({row.policy, row.scenario_id, {}, {}, {}});
    }
  }
  for (auto& agg : out) {
    std::vector<double> pct, dollars, cost;
    for (const auto& row : rows) {
      if (row.policy != agg.policy || row.scenario_id != agg.scenario_id || !row.error.empty())
        continue;
      if (row.yield_pct) pct.push_back(*row.yield_pct);
      dollars.push_back(row.yield_dollars);
      cost.push_back(row.pesticide_cost);
    }
    agg.yield_pct = stat_of(pct);
    agg.yield_dollars = stat_of(dollars);
    agg.pesticide_cost = stat_of(cost);
  }
  return out;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "policy,scenario_id,seed,yield_pct,yield_dollars,pesticide_cost,steps_used,sprays,"
         "infected_total\n";
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      out << row.policy << ',' << row.scenario_id << ',' << row.seed
          << ",error,error,error,0,0,0\n";
      continue;
    }
    out << row.policy << ',' << row.scenario_id << ',' << row.seed << ','
        << (row.yield_pct ? format_double(*row.yield_pct) : std::string("na")) << ','
        << format_double(row.yield_dollars) << ',' << format_double(row.pesticide_cost) << ','
        << row.steps_used << ',' << row.sprays << ',' << row.infected_total << '\n';
  }
  return out.str();
}

std::string MetricsReport::aggregates_to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& agg : aggregates()) {
    nlohmann::ordered_json j;
    j["policy"] = agg.policy;
    j["scenario"] = agg.scenario_id;
    j["yield_pct"] = {{"mean", agg.yield_pct.mean},
                      {"std", agg.yield_pct.stddev},
                      {"n", agg.yield_pct.n}};
    j["yield_dollars"] = {{"mean", agg.yield_dollars.mean},
                          {"std", agg.yield_dollars.stddev},
                          {"n", agg.yield_dollars.n}};
    j["pesticide_cost"] = {{"mean", agg.pesticide_cost.mean},
                           {"std", agg.pesticide_cost.stddev},
                           {"n", agg.pesticide_cost.n}};
    arr.push_back(j);
  }
  return arr.dump(2);
}

MetricsReport sweep(const std::vector<const EpisodePolicy*>& policies,
                    const std::vector<ScenarioConfig>& scenarios, const RewardParams& rewards,
                    const EvalSettings& settings, int workers) {
  std::vector<std::function<MetricsRow()>> cells;
  for (const EpisodePolicy* policy : policies) {
    for (const auto& scenario : scenarios) {
      for (int s = 0; s < settings.seeds; ++s) {
        const std::uint64_t seed = settings.base_seed + static_cast<std::uint64_t>(s);
        cells.push_back([policy, scenario, rewards, settings, seed] {
          return evaluate_cell(*policy, scenario, rewards, settings, seed);
        });
      }
    }
  }
  MetricsReport report;
  run_cells(cells, report.rows, workers);
  return report;
}

NoiseSweepResult noise_sweep(const EpisodePolicy& policy, const ScenarioConfig& scenario,
                             const RewardParams& rewards, const std::vector<double>& sigmas,
                             const std::vector<double>& flips, const EvalSettings& settings,
                             int workers) {
  struct Setting {
    std::string series;
    double level;
    NoiseModel noise;
  };
  std::vector<Setting> grid;
  grid.push_back({"none", 0.0, NoiseModel::none()});
  for (const double sigma : sigmas) grid.push_back({"gaussian", sigma, NoiseModel::gaussian(sigma)});
  for (const double p : flips) grid.push_back({"flip", p, NoiseModel::flip(p)});

  NoiseSweepResult result;
  for (const auto& setting : grid) {
    ScenarioConfig noisy = scenario;
    noisy.noise = setting.noise;
    MetricsReport partial = sweep({&policy}, {noisy}, rewards, settings, workers);
    std::vector<double> pct, cost;
    for (auto& row : partial.rows) {
      row.scenario_id = noisy.id() + "_" + setting.series + "_" + format_double(setting.level);
      if (row.error.empty()) {
        if (row.yield_pct) pct.push_back(*row.yield_pct);
        cost.push_back(row.pesticide_cost);
      }
      result.report.rows.push_back(row);
    }
    NoiseSweepPoint point;
    point.series = setting.series;
    point.level = setting.level;
    point.yield_pct = stat_of(pct);
    point.pesticide_cost = stat_of(cost);
    result.points.push_back(point);
  }
  return result;
}

std::string NoiseSweepResult::plot_csv(const std::string& metric) const {
  std::ostringstream out;
  out << "series,x,y\n";
  for (const auto& point : points) {
    const MetricStat& stat = metric == "pesticide_cost" ? point.pesticide_cost : point.yield_pct;
    out << point.series << ',' << format_double(point.level) << ',' << format_double(stat.mean)
        << '\n';
  }
  return out.str();
}

}  // namespace hamppo
