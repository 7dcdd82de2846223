#pragma once

#include <string>
#include <utility>

#include "hamppo/grid.hpp"
#include "hamppo/rng.hpp"

namespace hamppo {

enum class Randomness { Low, High };
enum class Initiation { Center, Corners };

// Severity assignment for generated infected cells: uniform over the three
// levels, or every cell at one fixed level.
struct LevelDistribution {
  bool categorical = true;
  Health fixed_level = Health::I2;

  bool operator==(const LevelDistribution&) const = default;
};

inline constexpr int kAutoBudget = -1;
inline constexpr long long kUnlimitedCharges = -1;
inline constexpr long long kPerEpisodeMap = -1;

struct ScenarioConfig {
  FieldGeometry geometry;
  double infection_lo = 0.2;
  double infection_hi = 0.3;
  Randomness randomness = Randomness::Low;
  // Frontier-selection temperature of the map generator; < 0 means derived
  // from `randomness` (0.1 low, 0.5 high).
  double scatter_q = -1.0;
  Initiation initiation = Initiation::Corners;
  LevelDistribution distribution;
  NoiseModel noise = NoiseModel::gaussian(0.15);
  int budget = kAutoBudget;
  int movement_buffer = 5;
  long long spray_charges = kUnlimitedCharges;
  // Fixed map seed: every episode replays the same infection map. < 0 draws
  // a fresh map from the episode seed.
  long long map_seed = kPerEpisodeMap;

  double scatter() const {
    if (scatter_q >= 0.0) return scatter_q;
    return randomness == Randomness::Low ? 0.1 : 0.5;
  }

  void validate() const;
  std::string id() const;

  bool operator==(const ScenarioConfig&) const = default;
};

// Interior-only infection map; headland framing is applied by the
// environment.
struct InfectionMap {
  Grid<Health> interior;
  int infected_count = 0;
};

InfectionMap generate_infection_map(const ScenarioConfig& config, Rng& rng);
InfectionMap generate_infection_map(const ScenarioConfig& config, std::uint64_t seed);

// Episode timestep budget: explicit when configured, otherwise a base
// traversal cost plus a range-dependent coverage buffer plus the deep-scout
// cost of the mean infected count.
int battery_budget(const ScenarioConfig& config);

// Plain-text grid exchange format, one character per cell over the full grid
// including headland rows: '.' healthy, '1'-'3' infected, 'e' empty.
std::string map_to_text(const InfectionMap& map, const FieldGeometry& geometry);
std::pair<InfectionMap, FieldGeometry> map_from_text(const std::string& text);

}  // namespace hamppo
