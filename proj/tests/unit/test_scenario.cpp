#include <doctest.h>

#include <set>
#include <vector>

#include "hamppo/scenario.hpp"

using namespace hamppo;

namespace {

ScenarioConfig base_10x10() {
  ScenarioConfig s;
  s.geometry = {10, 10, 1};
  s.infection_lo = 0.2;
  s.infection_hi = 0.3;
  return s;
}

// Flood-fill count of 4-connected infected components.
int connected_components(const Grid<Health>& interior) {
  Grid<std::uint8_t> seen(interior.rows(), interior.cols(), 0);
  int components = 0;
  for (int r = 0; r < interior.rows(); ++r) {
    for (int c = 0; c < interior.cols(); ++c) {
      if (!is_infected(interior.at(r, c)) || seen.at(r, c)) continue;
      ++components;
      std::vector<Cell> stack{{r, c}};
      seen.at(r, c) = 1;
      while (!stack.empty()) {
        const Cell cur = stack.back();
        stack.pop_back();
        const Cell neighbors[4] = {{cur.row - 1, cur.col},
                                   {cur.row + 1, cur.col},
                                   {cur.row, cur.col - 1},
                                   {cur.row, cur.col + 1}};
        for (const Cell n : neighbors) {
          if (!interior.contains(n) || seen.at(n) || !is_infected(interior.at(n))) continue;
          seen.at(n) = 1;
          stack.push_back(n);
        }
      }
    }
  }
  return components;
}

}  // namespace

TEST_CASE("battery budget reproduces the published scenario budgets") {
  ScenarioConfig s = base_10x10();
  CHECK(battery_budget(s) == 230);

  s.infection_lo = 0.3;
  s.infection_hi = 0.4;
  CHECK(battery_budget(s) == 290);

  s.budget = 520;
  CHECK(battery_budget(s) == 520);
}

TEST_CASE("generated infected count stays inside the configured range") {
  ScenarioConfig s = base_10x10();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const InfectionMap map = generate_infection_map(s, seed);
    CHECK(map.infected_count >= 20);
    CHECK(map.infected_count <= 30);
    int counted = 0;
    for (const Health h : map.interior.data()) counted += is_infected(h) ? 1 : 0;
    CHECK(counted == map.infected_count);
  }
}

TEST_CASE("a saturated range infects every interior cell") {
  ScenarioConfig s = base_10x10();
  s.infection_lo = 1.0;
  s.infection_hi = 1.0;
  const InfectionMap map = generate_infection_map(s, 3);
  CHECK(map.infected_count == 100);
}

TEST_CASE("low randomness center initiation grows one 4-connected region") {
  ScenarioConfig s = base_10x10();
  s.randomness = Randomness::Low;
  s.initiation = Initiation::Center;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const InfectionMap map = generate_infection_map(s, seed);
    CHECK(connected_components(map.interior) == 1);
  }
}

TEST_CASE("low randomness corner initiation yields at most two components") {
  ScenarioConfig s = base_10x10();
  s.randomness = Randomness::Low;
  s.initiation = Initiation::Corners;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const InfectionMap map = generate_infection_map(s, seed);
    CHECK(connected_components(map.interior) <= 2);
  }
}

TEST_CASE("identical seeds give identical maps") {
  ScenarioConfig s = base_10x10();
  s.randomness = Randomness::High;
  const InfectionMap a = generate_infection_map(s, 99);
  const InfectionMap b = generate_infection_map(s, 99);
  CHECK(a.interior == b.interior);
  CHECK(a.infected_count == b.infected_count);
  const InfectionMap c = generate_infection_map(s, 100);
  CHECK(a.interior.data() != c.interior.data());
}

TEST_CASE("level assignment follows the configured distribution") {
  ScenarioConfig s = base_10x10();

  SUBCASE("categorical covers all three levels") {
    std::set<Health> seen;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const InfectionMap map = generate_infection_map(s, seed);
      for (const Health h : map.interior.data()) {
        if (is_infected(h)) seen.insert(h);
      }
    }
    CHECK(seen == std::set<Health>{Health::I1, Health::I2, Health::I3});
  }

  SUBCASE("fixed assigns one level everywhere") {
    s.distribution = LevelDistribution{false, Health::I3};
    const InfectionMap map = generate_infection_map(s, 4);
    for (const Health h : map.interior.data()) {
      if (is_infected(h)) CHECK(h == Health::I3);
    }
  }
}

TEST_CASE("scenario validation rejects malformed configurations") {
  ScenarioConfig s = base_10x10();
  s.infection_lo = 0.5;
  s.infection_hi = 0.4;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = base_10x10();
  s.infection_hi = 1.2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = base_10x10();
  s.geometry.cols = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("map text round trips through the exchange format") {
  ScenarioConfig s = base_10x10();
  s.randomness = Randomness::High;
  const InfectionMap map = generate_infection_map(s, 12);
  const std::string text = map_to_text(map, s.geometry);
  const auto [parsed, geometry] = map_from_text(text);
  CHECK(geometry == s.geometry);
  CHECK(parsed.interior == map.interior);
  CHECK(parsed.infected_count == map.infected_count);
}

TEST_CASE("map parser rejects malformed grids") {
  CHECK_THROWS_AS(map_from_text("ee\n..\n.x\nee\n"), std::invalid_argument);
  CHECK_THROWS_AS(map_from_text("..\n..\n"), std::invalid_argument);       // no headland
  CHECK_THROWS_AS(map_from_text("ee\n.e\nee\n"), std::invalid_argument);   // empty interior cell
  CHECK_THROWS_AS(map_from_text("ee\n...\nee\n"), std::invalid_argument);  // ragged rows
}

TEST_CASE("scenario ids name the axes") {
  ScenarioConfig s = base_10x10();
  CHECK(s.id() == "r20-30_low_corners");
  s.randomness = Randomness::High;
  s.initiation = Initiation::Center;
  s.infection_lo = 0.3;
  s.infection_hi = 0.4;
  CHECK(s.id() == "r30-40_high_center");
}
