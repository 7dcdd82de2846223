#include "hamppo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace hamppo {
namespace {

constexpr int kRowDelta[4] = {-1, 1, 0, 0};
constexpr int kColDelta[4] = {0, 0, -1, 1};

int infected_neighbors(const Grid<Health>& interior, Cell c) {
  int count = 0;
  for (int d = 0; d < 4; ++d) {
    const Cell n{c.row + kRowDelta[d], c.col + kColDelta[d]};
    if (interior.contains(n) && is_infected(interior.at(n))) ++count;
  }
  return count;
}

Health draw_level(const LevelDistribution& distribution, Rng& rng) {
  if (distribution.categorical) return infection_from_level(rng.uniform_int(3) + 1);
  return distribution.fixed_level;
}

std::vector<Cell> seed_cells(const ScenarioConfig& config) {
  const int l = config.geometry.interior_rows;
  const int w = config.geometry.cols;
  if (config.initiation == Initiation::Center) return {{(l - 1) / 2, (w - 1) / 2}};
  return {{0, 0}, {l - 1, w - 1}};
}

}  // namespace

void ScenarioConfig::validate() const {
  geometry.validate();
  if (infection_lo < 0.0 || infection_hi > 1.0 || infection_lo > infection_hi)
    throw std::invalid_argument("infection range must satisfy 0 <= lo <= hi <= 1");
  if (scatter_q >= 0.0 && scatter_q > 1.0)
    throw std::invalid_argument("scatter_q must be in [0, 1]");
  if (!distribution.categorical && !is_infected(distribution.fixed_level))
    throw std::invalid_argument("fixed level distribution requires an infected level");
  noise.validate();
  if (budget != kAutoBudget && budget < 0)
    throw std::invalid_argument("explicit budget must be >= 0");
  if (movement_buffer < 0) throw std::invalid_argument("movement_buffer must be >= 0");
}

std::string ScenarioConfig::id() const {
  std::ostringstream out;
  out << "r" << std::lround(infection_lo * 100) << "-" << std::lround(infection_hi * 100)
      << (randomness == Randomness::Low ? "_low" : "_high")
      << (initiation == Initiation::Center ? "_center" : "_corners");
  return out.str();
}

InfectionMap generate_infection_map(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  const int l = config.geometry.interior_rows;
  const int w = config.geometry.cols;
  const int cells = l * w;

  const int lo = static_cast<int>(std::ceil(config.infection_lo * cells));
  const int hi = static_cast<int>(std::floor(config.infection_hi * cells));
  if (lo > cells) throw std::invalid_argument("target infected count exceeds field size");
  int target = lo >= hi ? lo : lo + rng.uniform_int(hi - lo + 1);
  target = std::min(target, cells);

  InfectionMap map{Grid<Health>(l, w, Health::Healthy), 0};
  const double q = config.scatter();

  auto infect = [&](Cell c) {
    map.interior.at(c) = draw_level(config.distribution, rng);
    ++map.infected_count;
  };

  for (const Cell seed : seed_cells(config)) {
    if (map.infected_count >= target) break;
    if (!is_infected(map.interior.at(seed))) infect(seed);
  }

  // Frontier growth: every new cell is 4-adjacent to the region, so each
  // initiation seed grows one connected component. Low scatter favors the
  // frontier cells touching the most infected neighbors (round blobs); high
  // scatter picks uniformly (ragged spread).
  std::vector<Cell> candidates;
  while (map.infected_count < target) {
    candidates.clear();
    int best_neighbors = 0;
    const bool uniform_pick = rng.bernoulli(q);
    for (int r = 0; r < l; ++r) {
      for (int c = 0; c < w; ++c) {
        const Cell cell{r, c};
        if (is_infected(map.interior.at(cell))) continue;
        const int n = infected_neighbors(map.interior, cell);
        if (n == 0) continue;
        if (uniform_pick) {
          candidates.push_back(cell);
        } else if (n > best_neighbors) {
          best_neighbors = n;
          candidates.assign(1, cell);
        } else if (n == best_neighbors) {
          candidates.push_back(cell);
        }
      }
    }
    if (candidates.empty()) throw std::logic_error("infection growth exhausted the frontier");
    infect(candidates[rng.uniform_int(static_cast<int>(candidates.size()))]);
  }
  return map;
}

InfectionMap generate_infection_map(const ScenarioConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return generate_infection_map(config, rng);
}

int battery_budget(const ScenarioConfig& config) {
  config.validate();
  if (config.budget != kAutoBudget) return config.budget;
  const double mean_fraction = 0.5 * (config.infection_lo + config.infection_hi);
  const long mean_infected = std::lround(mean_fraction * config.geometry.interior_cells());
  long coverage_buffer;
  if (config.infection_hi <= 0.3) {
    coverage_buffer = 50;
  } else if (config.infection_hi <= 0.4) {
    coverage_buffer = 60;
  } else {
    coverage_buffer = std::lround(60.0 + 100.0 * (config.infection_hi - 0.4));
  }
  return static_cast<int>(50 + config.movement_buffer + coverage_buffer + 5 * mean_infected);
}

std::string map_to_text(const InfectionMap& map, const FieldGeometry& geometry) {
  geometry.validate();
  if (map.interior.rows() != geometry.interior_rows || map.interior.cols() != geometry.cols)
    throw std::invalid_argument("map dimensions do not match geometry");
  std::ostringstream out;
  for (int r = 0; r < geometry.rows(); ++r) {
    for (int c = 0; c < geometry.cols; ++c) {
      if (geometry.is_headland_row(r)) {
        out << health_to_char(Health::Empty);
      } else {
        out << health_to_char(map.interior.at(r - geometry.headland, c));
      }
    }
    out << '\n';
  }
  return out.str();
}

std::pair<InfectionMap, FieldGeometry> map_from_text(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() < 3) throw std::invalid_argument("map must have headland rows and an interior");
  const int cols = static_cast<int>(lines.front().size());
  for (const auto& line : lines) {
    if (static_cast<int>(line.size()) != cols)
      throw std::invalid_argument("map rows must have equal width");
  }

  int top_headland = 0;
  while (top_headland < static_cast<int>(lines.size()) &&
         lines[top_headland] == std::string(cols, 'e'))
    ++top_headland;
  if (top_headland == 0 || top_headland >= static_cast<int>(lines.size()))
    throw std::invalid_argument("map must start with headland rows");

  int bottom_headland = 0;
  while (bottom_headland < static_cast<int>(lines.size()) &&
         lines[lines.size() - 1 - bottom_headland] == std::string(cols, 'e'))
    ++bottom_headland;
  if (top_headland != bottom_headland)
    throw std::invalid_argument("headland rows must be symmetric");

  const int interior_rows = static_cast<int>(lines.size()) - 2 * top_headland;
  if (interior_rows <= 0) throw std::invalid_argument("map has no interior rows");

  FieldGeometry geometry{interior_rows, cols, top_headland};
  InfectionMap map{Grid<Health>(interior_rows, cols, Health::Healthy), 0};
  for (int r = 0; r < interior_rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Health h = health_from_char(lines[r + top_headland][c]);
      if (h == Health::Empty)
        throw std::invalid_argument("interior rows must not contain empty cells");
      map.interior.at(r, c) = h;
      if (is_infected(h)) ++map.infected_count;
    }
  }
  return {map, geometry};
}

}  // namespace hamppo
