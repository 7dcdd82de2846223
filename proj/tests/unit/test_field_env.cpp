#include <doctest.h>

#include <cmath>
#include <vector>

#include "hamppo/baselines.hpp"
#include "hamppo/field_env.hpp"

using namespace hamppo;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig s;
  s.geometry = {4, 4, 1};
  s.infection_lo = 0.2;
  s.infection_hi = 0.4;
  s.noise = NoiseModel::none();
  s.budget = 60;
  return s;
}

// Reward params used by the worked numeric examples: level 3 at two days of
// infection with a three-day t50.
RewardParams example_params() {
  RewardParams p;
  p.levels[2].t_inf = 2.0;
  return p;
}

}  // namespace

TEST_CASE("attainable yield fraction closed form") {
  CHECK(attainable_yield_fraction(0.0, 0.0) == 0.5);
  CHECK(attainable_yield_fraction(100.0, 0.0) ==
        doctest::Approx(3.720075976020836e-44).epsilon(1e-12));
  // arbitrary-precision oracle value for t_inf=2, t50=3
  CHECK(attainable_yield_fraction(2.0, 3.0) ==
        doctest::Approx(0.0066928509242848555).epsilon(1e-14));
  const long double decay = std::exp(-5.0L);
  CHECK(attainable_yield_fraction(2.0, 3.0) ==
        doctest::Approx(static_cast<double>(decay / (1.0L + decay))).epsilon(1e-15));
  CHECK_THROWS_AS(attainable_yield_fraction(-1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(attainable_yield_fraction(0.0, -0.5), std::invalid_argument);
}

TEST_CASE("attainable yield fraction is strictly decreasing in infection duration") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const double t50 = rng.uniform(0.0, 10.0);
    const double t = rng.uniform(0.0, 30.0);
    const double dt = rng.uniform(1e-6, 5.0);
    CHECK(attainable_yield_fraction(t + dt, t50) < attainable_yield_fraction(t, t50));
  }
}

TEST_CASE("yield loss") {
  CHECK(yield_loss(1.0, 0.5) == 0.0);
  CHECK(yield_loss(0.5, 1.0) == 0.5);
  CHECK(yield_loss(0.0066928509242848555, 0.66) ==
        doctest::Approx(0.65558271838997200).epsilon(1e-14));
  CHECK_THROWS_AS(yield_loss(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(yield_loss(0.5, 1.5), std::invalid_argument);
}

TEST_CASE("scout reward components") {
  const RewardParams p = example_params();

  SUBCASE("revisiting a healthy cell costs the revisit penalty") {
    for (const double hint : {0.0, 0.3, 1.0}) {
      const auto r = reward_scout(Health::Healthy, true, hint, p);
      CHECK(r.value == -5.0);
      CHECK(r.component == RewardComponent::RevisitHealthy);
    }
  }

  SUBCASE("first visit to an infected cell scales with the hint") {
    const auto zero = reward_scout(Health::I3, false, 0.0, p);
    CHECK(zero.value == 0.0);
    CHECK(zero.component == RewardComponent::ScoutInfected);

    const auto full = reward_scout(Health::I3, false, 1.0, p);
    CHECK(full.value == doctest::Approx(0.066928509242848556).epsilon(1e-14));
  }

  SUBCASE("everything else is neutral") {
    CHECK(reward_scout(Health::Healthy, false, 0.5, p).value == 0.0);
    CHECK(reward_scout(Health::I2, true, 0.5, p).value == 0.0);
    CHECK(reward_scout(Health::Empty, true, 0.5, p).value == 0.0);
  }

  SUBCASE("hints outside [0,1] are rejected") {
    CHECK_THROWS_AS(reward_scout(Health::I1, false, 1.5, p), std::invalid_argument);
  }
}

TEST_CASE("deep scout reward components") {
  SUBCASE("spraying a healthy cell costs the pesticide price") {
    const RewardParams p;
    const auto r = reward_deep_scout(Health::Healthy, true, p);
    CHECK(r.value == -0.05);
    CHECK(r.component == RewardComponent::SprayHealthy);
    CHECK(reward_deep_scout(Health::Healthy, false, p).value == 0.0);
  }

  SUBCASE("not spraying an infected cell forfeits the recoverable yield") {
    const RewardParams p = example_params();
    RewardParams q = p;
    q.levels[1].t_inf = 2.0;  // eta 0.0066928..., p_inf 0.66
    const auto r = reward_deep_scout(Health::I2, false, q);
    CHECK(r.value == doctest::Approx(-6.5558271838997200).epsilon(1e-13));
    CHECK(r.component == RewardComponent::NoSprayInfected);
  }

  SUBCASE("spraying an infected cell earns the recovery minus the pesticide price") {
    RewardParams p;
    p.t50 = 0.0;
    p.levels[0].t_inf = 0.0;  // eta exactly 0.5
    const auto r = reward_deep_scout(Health::I1, true, p);
    CHECK(r.value == doctest::Approx(4.95).epsilon(1e-15));
    CHECK(r.component == RewardComponent::SprayInfected);
  }

  SUBCASE("deep scouting an empty cell is a contract violation") {
    CHECK_THROWS_AS(reward_deep_scout(Health::Empty, true, RewardParams{}),
                    std::invalid_argument);
  }
}

TEST_CASE("reward params validation") {
  RewardParams p;
  p.levels[1].p_inf = 0.2;  // not increasing
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = RewardParams{};
  p.upp = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("step battery accounting and termination") {
  ScenarioConfig s = small_scenario();
  s.budget = 8;
  FieldEnv env(s, RewardParams{});
  env.reset(3);

  SUBCASE("a deep scout at battery 7 leaves 2 and does not terminate") {
    // move onto the interior first so deep scout is valid
    env.step(HierAction::scout(Move::Down), 0.0);
    CHECK(env.state().battery_remaining == 7);
    const auto out = env.step(HierAction::deep_scout(true), 0.0);
    CHECK(env.state().battery_remaining == 2);
    CHECK_FALSE(out.done);
  }

  SUBCASE("the battery hitting zero terminates the episode") {
    ScenarioConfig one = small_scenario();
    one.budget = 1;
    FieldEnv tiny(one, RewardParams{});
    tiny.reset(3);
    const auto out = tiny.step(HierAction::scout(Move::Down), 0.0);
    CHECK(tiny.state().battery_remaining == 0);
    CHECK(out.done);
    CHECK_THROWS_AS(tiny.step(HierAction::scout(Move::Up), 0.0), std::logic_error);
  }
}

TEST_CASE("invalid actions are contract violations") {
  FieldEnv env(small_scenario(), RewardParams{});
  env.reset(5);
  // agent starts on the top headland: Up is off-grid, deep scout is masked
  CHECK_THROWS_AS(env.step(HierAction::scout(Move::Up), 0.0), std::logic_error);
  CHECK_THROWS_AS(env.step(HierAction::deep_scout(true), 0.0), std::logic_error);
  // lateral movement is masked away from the headland
  env.step(HierAction::scout(Move::Down), 0.0);
  CHECK_THROWS_AS(env.step(HierAction::scout(Move::Right), 0.0), std::logic_error);
}

TEST_CASE("deep scout on a sprayed cell is masked") {
  FieldEnv env(small_scenario(), RewardParams{});
  env.reset(5);
  env.step(HierAction::scout(Move::Down), 0.0);
  env.step(HierAction::deep_scout(true), 0.0);
  CHECK(env.state().sprayed.at(env.state().position));
  CHECK_FALSE(env.masks().type_valid[static_cast<int>(ActionType::DeepScout)]);
  CHECK_THROWS_AS(env.step(HierAction::deep_scout(false), 0.0), std::logic_error);
}

TEST_CASE("rewards equal the sum of their components on random episodes") {
  ScenarioConfig s = small_scenario();
  s.noise = NoiseModel::gaussian(0.15);
  FieldEnv env(s, RewardParams{});
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env.reset(seed);
    while (!env.done()) {
      const auto action = random_decide(env.masks(), rng);
      const auto out = env.step(action, rng.uniform01());
      CHECK(out.reward == out.info.total());
      CHECK(out.battery_spent ==
            (action.type == ActionType::Scout ? FieldEnv::kScoutDuration
                                              : FieldEnv::kDeepScoutDuration));
    }
    CHECK(env.timesteps_consumed() <= battery_budget(s) + FieldEnv::kDeepScoutDuration);
  }
}

TEST_CASE("histories and invariants hold along an episode") {
  ScenarioConfig s = small_scenario();
  FieldEnv env(s, RewardParams{});
  env.reset(11);
  Rng rng(12);
  int battery = env.state().battery_remaining;
  while (!env.done()) {
    env.step(random_decide(env.masks(), rng), 0.0);
    const FieldState& st = env.state();
    CHECK(st.battery_remaining <= battery);
    battery = st.battery_remaining;
    CHECK(st.visited.at(st.position));
    for (int r = 0; r < st.geometry.rows(); ++r) {
      for (int c = 0; c < st.geometry.cols; ++c) {
        if (st.sprayed.at(r, c)) CHECK(st.visited.at(r, c));
      }
    }
  }
}

TEST_CASE("observations reveal visited cells exactly") {
  ScenarioConfig s = small_scenario();
  s.noise = NoiseModel::flip(0.5);
  s.distribution = LevelDistribution{false, Health::I2};
  FieldEnv env(s, RewardParams{});
  Observation obs = env.reset(17);
  Rng rng(18);
  while (!env.done()) {
    const auto out = env.step(random_decide(env.masks(), rng), 0.0);
    obs = out.observation;
    const FieldState& st = env.state();
    for (int r = 0; r < st.geometry.rows(); ++r) {
      for (int c = 0; c < st.geometry.cols; ++c) {
        if (!st.visited.at(r, c)) continue;
        CHECK(obs.belief.at(r, c) == belief_encoding(st.health.at(r, c)));
      }
    }
  }
}

TEST_CASE("noise models perturb unvisited cells as specified") {
  SUBCASE("no noise reports the binary indicator") {
    ScenarioConfig s = small_scenario();
    s.infection_lo = s.infection_hi = 0.5;
    FieldEnv env(s, RewardParams{});
    const Observation obs = env.reset(23);
    const FieldState& st = env.state();
    for (int r = 0; r < st.geometry.rows(); ++r) {
      for (int c = 0; c < st.geometry.cols; ++c) {
        if (st.visited.at(r, c)) continue;
        CHECK(obs.belief.at(r, c) == (is_infected(st.health.at(r, c)) ? 1.0 : 0.0));
      }
    }
  }

  SUBCASE("certain flip inverts every unvisited indicator") {
    ScenarioConfig s = small_scenario();
    s.noise = NoiseModel::flip(1.0);
    FieldEnv env(s, RewardParams{});
    const Observation obs = env.reset(23);
    const FieldState& st = env.state();
    for (int r = 0; r < st.geometry.rows(); ++r) {
      for (int c = 0; c < st.geometry.cols; ++c) {
        if (st.visited.at(r, c)) continue;
        CHECK(obs.belief.at(r, c) == (is_infected(st.health.at(r, c)) ? 0.0 : 1.0));
      }
    }
  }

  SUBCASE("gaussian noise replays from the documented seed stream") {
    ScenarioConfig s = small_scenario();
    s.noise = NoiseModel::gaussian(0.15);
    FieldEnv env(s, RewardParams{});
    const std::uint64_t seed = 29;
    const Observation obs = env.reset(seed);
    const FieldState& st = env.state();

    Rng oracle = Rng::derive(seed, FieldEnv::kNoiseStream);
    for (int r = 0; r < st.geometry.rows(); ++r) {
      for (int c = 0; c < st.geometry.cols; ++c) {
        if (st.visited.at(r, c)) continue;
        const double indicator = is_infected(st.health.at(r, c)) ? 1.0 : 0.0;
        const double expected = std::clamp(indicator + oracle.normal(0.0, 0.15), 0.0, 1.0);
        CHECK(obs.belief.at(r, c) == expected);
      }
    }
  }
}

TEST_CASE("reset is deterministic and honors the budget rule") {
  ScenarioConfig s;
  s.geometry = {10, 10, 1};
  s.infection_lo = 0.2;
  s.infection_hi = 0.3;
  s.noise = NoiseModel::gaussian(0.15);
  FieldEnv a(s, RewardParams{});
  FieldEnv b(s, RewardParams{});
  const Observation oa = a.reset(101);
  const Observation ob = b.reset(101);
  CHECK(a.state().battery_remaining == 230);
  CHECK(a.state().health == b.state().health);
  CHECK(a.state().position == b.state().position);
  CHECK(oa.belief == ob.belief);
  CHECK(a.infected_total() >= 20);
  CHECK(a.infected_total() <= 30);
  CHECK(a.state().position == Cell{0, 0});
  CHECK(a.state().visited.at(0, 0));
}

TEST_CASE("identical seeds and actions give bit-identical outcomes") {
  ScenarioConfig s = small_scenario();
  s.noise = NoiseModel::gaussian(0.2);
  FieldEnv a(s, RewardParams{});
  FieldEnv b(s, RewardParams{});
  a.reset(31);
  b.reset(31);
  Rng action_rng_a(32), action_rng_b(32);
  while (!a.done()) {
    const auto action_a = random_decide(a.masks(), action_rng_a);
    const auto action_b = random_decide(b.masks(), action_rng_b);
    CHECK(action_a == action_b);
    const auto out_a = a.step(action_a, 0.37);
    const auto out_b = b.step(action_b, 0.37);
    CHECK(out_a.reward == out_b.reward);
    CHECK(out_a.done == out_b.done);
    CHECK(out_a.observation.belief == out_b.observation.belief);
  }
  CHECK(b.done());
}

TEST_CASE("spray charges terminate the episode when exhausted") {
  ScenarioConfig s = small_scenario();
  s.spray_charges = 2;
  FieldEnv env(s, RewardParams{});
  env.reset(37);
  env.step(HierAction::scout(Move::Down), 0.0);
  CHECK_FALSE(env.step(HierAction::deep_scout(true), 0.0).done);
  env.step(HierAction::scout(Move::Down), 0.0);
  const auto out = env.step(HierAction::deep_scout(true), 0.0);
  CHECK(out.done);
}

TEST_CASE("a zero budget episode is done at reset") {
  ScenarioConfig s = small_scenario();
  s.budget = 0;
  FieldEnv env(s, RewardParams{});
  env.reset(41);
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(HierAction::scout(Move::Down), 0.0), std::logic_error);
}

TEST_CASE("the post-move observation is handed to the hint provider") {
  ScenarioConfig s = small_scenario();
  s.infection_lo = s.infection_hi = 1.0;  // every interior cell infected
  FieldEnv env(s, RewardParams{});
  env.reset(43);
  bool called = false;
  const auto out = env.step(HierAction::scout(Move::Down), [&](const Observation& post) {
    called = true;
    CHECK(post.position == Cell{1, 0});
    CHECK(post.visited.at(1, 0));
    return 1.0;
  });
  CHECK(called);
  CHECK(out.reward > 0.0);
  CHECK(out.info.scout_infected == out.reward);
}
