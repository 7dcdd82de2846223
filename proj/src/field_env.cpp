#include "hamppo/field_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hamppo {

double attainable_yield_fraction(double t_inf, double t50) {
  if (t_inf < 0.0 || t50 < 0.0)
    throw std::invalid_argument("infection durations must be non-negative");
  const double decay = std::exp(-(t_inf + t50));
  return decay / (1.0 + decay);
}

double yield_loss(double eta_y, double p_inf) {
  if (eta_y < 0.0 || eta_y > 1.0) throw std::invalid_argument("eta_y must be in [0, 1]");
  if (p_inf < 0.0 || p_inf > 1.0) throw std::invalid_argument("p_inf must be in [0, 1]");
  return (1.0 - eta_y) * p_inf;
}

void RewardParams::validate() const {
  if (uay < 0.0 || ppb < 0.0 || upp < 0.0 || kappa_rev < 0.0)
    throw std::invalid_argument("economic constants must be non-negative");
  if (t50 < 0.0) throw std::invalid_argument("t50 must be non-negative");
  double prev = -1.0;
  for (const auto& level : levels) {
    if (level.t_inf < 0.0) throw std::invalid_argument("infection duration must be non-negative");
    if (level.p_inf < 0.0 || level.p_inf > 1.0)
      throw std::invalid_argument("severity index must be in [0, 1]");
    if (level.p_inf <= prev)
      throw std::invalid_argument("severity index must be strictly increasing across levels");
    prev = level.p_inf;
  }
}

const RewardParams::LevelParams& RewardParams::level(Health h) const {
  if (!is_infected(h)) throw std::invalid_argument("level params exist only for infected cells");
  return levels[infection_level(h) - 1];
}

double RewardParams::eta_y(Health h) const {
  return attainable_yield_fraction(level(h).t_inf, t50);
}

void RewardBreakdown::set(RewardComponent component, double value) {
  switch (component) {
    case RewardComponent::None: return;
    case RewardComponent::ScoutInfected: scout_infected = value; return;
    case RewardComponent::RevisitHealthy: revisit_healthy = value; return;
    case RewardComponent::SprayInfected: spray_infected = value; return;
    case RewardComponent::NoSprayInfected: nospray_infected = value; return;
    case RewardComponent::SprayHealthy: spray_healthy = value; return;
  }
}

TaggedReward reward_scout(Health dest_health, bool dest_visited, double spray_prob_hint,
                          const RewardParams& params) {
  if (spray_prob_hint < 0.0 || spray_prob_hint > 1.0)
    throw std::invalid_argument("spray probability hint must be in [0, 1]");
  if (is_infected(dest_health) && !dest_visited) {
    return {params.eta_y(dest_health) * params.uay * params.ppb * spray_prob_hint,
            RewardComponent::ScoutInfected};
  }
  if (dest_health == Health::Healthy && dest_visited) {
    return {-params.kappa_rev, RewardComponent::RevisitHealthy};
  }
  return {0.0, RewardComponent::None};
}

TaggedReward reward_deep_scout(Health cell_health, bool spray, const RewardParams& params) {
  if (cell_health == Health::Empty)
    throw std::invalid_argument("deep scout on an empty cell must be masked");
  if (is_infected(cell_health)) {
    if (spray) {
      return {params.eta_y(cell_health) * params.uay * params.ppb - params.upp,
              RewardComponent::SprayInfected};
    }
    return {-yield_loss(params.eta_y(cell_health), params.level(cell_health).p_inf) *
                params.uay * params.ppb,
            RewardComponent::NoSprayInfected};
  }
  if (spray) return {-params.upp, RewardComponent::SprayHealthy};
  return {0.0, RewardComponent::None};
}

double belief_encoding(Health h) {
  return is_infected(h) ? infection_level(h) / 3.0 : 0.0;
}

FieldEnv::FieldEnv(ScenarioConfig scenario, RewardParams rewards)
    : scenario_(std::move(scenario)), rewards_(std::move(rewards)) {
  scenario_.validate();
  rewards_.validate();
}

Observation FieldEnv::reset(std::uint64_t seed) {
  const FieldGeometry& geom = scenario_.geometry;
  const std::uint64_t map_seed = scenario_.map_seed >= 0
                                     ? static_cast<std::uint64_t>(scenario_.map_seed)
                                     : Rng::derive(seed, kMapStream).next_u64();
  const InfectionMap map = generate_infection_map(scenario_, map_seed);

  state_.geometry = geom;
  state_.health = Grid<Health>(geom.rows(), geom.cols, Health::Empty);
  for (int r = 0; r < geom.interior_rows; ++r) {
    for (int c = 0; c < geom.cols; ++c) {
      state_.health.at(geom.interior_to_grid({r, c})) = map.interior.at(r, c);
    }
  }
  infected_total_ = map.infected_count;

  state_.position = {0, 0};
  state_.visited = Grid<std::uint8_t>(geom.rows(), geom.cols, 0);
  state_.sprayed = Grid<std::uint8_t>(geom.rows(), geom.cols, 0);
  state_.visited.at(state_.position) = 1;
  state_.battery_budget = battery_budget(scenario_);
  state_.battery_remaining = state_.battery_budget;
  state_.spray_charges_remaining = scenario_.spray_charges;
  state_.step_count = 0;

  noise_rng_ = Rng::derive(seed, kNoiseStream);
  consumed_ = 0;
  max_actions_ = 4 * std::max(state_.battery_budget, 1);
  done_ = state_.battery_remaining <= 0 || state_.spray_charges_remaining == 0;
  return observe();
}

Observation FieldEnv::observe() {
  const FieldGeometry& geom = state_.geometry;
  Observation obs;
  obs.belief = Grid<double>(geom.rows(), geom.cols, 0.0);
  obs.visited = state_.visited;
  obs.sprayed = state_.sprayed;
  obs.position = state_.position;
  obs.battery_fraction =
      state_.battery_budget > 0
          ? static_cast<double>(state_.battery_remaining) / state_.battery_budget
          : 0.0;

  // Row-major pass; visited cells report their exact encoding and draw no
  // noise, unvisited cells perturb the binary infection indicator.
  for (int r = 0; r < geom.rows(); ++r) {
    for (int c = 0; c < geom.cols; ++c) {
      const Health h = state_.health.at(r, c);
      if (state_.visited.at(r, c)) {
        obs.belief.at(r, c) = belief_encoding(h);
        continue;
      }
      const double indicator = is_infected(h) ? 1.0 : 0.0;
      switch (scenario_.noise.kind) {
        case NoiseModel::Kind::None:
          obs.belief.at(r, c) = indicator;
          break;
        case NoiseModel::Kind::Gaussian:
          obs.belief.at(r, c) =
              std::clamp(indicator + noise_rng_.normal(0.0, scenario_.noise.param), 0.0, 1.0);
          break;
        case NoiseModel::Kind::Flip:
          obs.belief.at(r, c) =
              noise_rng_.bernoulli(scenario_.noise.param) ? 1.0 - indicator : indicator;
          break;
      }
    }
  }
  return obs;
}

ActionMask FieldEnv::masks() const {
  return compute_masks(state_.geometry, state_.position,
                       state_.sprayed.at(state_.position) != 0);
}

StepOutcome FieldEnv::step(const HierAction& action, double spray_prob_hint) {
  return step(action, SprayHintFn([spray_prob_hint](const Observation&) {
                return spray_prob_hint;
              }));
}

StepOutcome FieldEnv::step(const HierAction& action, const SprayHintFn& hint) {
  if (done_) throw std::logic_error("step() after the episode has terminated");
  if (state_.battery_remaining <= 0) throw std::logic_error("step() with a depleted battery");
  if (!masks().allows(action))
    throw std::logic_error("action is invalid under the current masks");

  StepOutcome outcome;
  if (action.type == ActionType::Scout) {
    const Cell dest = move_destination(state_.position, action.move());
    const Health dest_health = state_.health.at(dest);
    const bool dest_visited = state_.visited.at(dest) != 0;

    outcome.battery_spent = kScoutDuration;
    state_.battery_remaining = std::max(0, state_.battery_remaining - kScoutDuration);
    state_.position = dest;
    state_.visited.at(dest) = 1;
    outcome.observation = observe();

    const bool hint_matters = is_infected(dest_health) && !dest_visited;
    const double ps = hint_matters ? hint(outcome.observation) : 0.0;
    const TaggedReward reward = reward_scout(dest_health, dest_visited, ps, rewards_);
    outcome.reward = reward.value;
    outcome.info.set(reward.component, reward.value);
  } else {
    const Health cell_health = state_.health.at(state_.position);
    outcome.battery_spent = kDeepScoutDuration;
    state_.battery_remaining = std::max(0, state_.battery_remaining - kDeepScoutDuration);

    const TaggedReward reward = reward_deep_scout(cell_health, action.spray(), rewards_);
    if (action.spray()) {
      state_.sprayed.at(state_.position) = 1;
      if (state_.spray_charges_remaining > 0) --state_.spray_charges_remaining;
    }
    outcome.observation = observe();
    outcome.reward = reward.value;
    outcome.info.set(reward.component, reward.value);
  }

  consumed_ += outcome.battery_spent;
  ++state_.step_count;
  done_ = state_.battery_remaining <= 0 || state_.spray_charges_remaining == 0 ||
          state_.step_count >= max_actions_;
  outcome.done = done_;
  return outcome;
}

}  // namespace hamppo
