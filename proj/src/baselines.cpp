#include "hamppo/baselines.hpp"

#include <vector>

namespace hamppo {

HierAction lawnmower_next(const FieldGeometry& geometry, Cell position) {
  if (!geometry.contains(position)) throw std::invalid_argument("position is off-grid");
  const bool even_col = position.col % 2 == 0;
  if (!geometry.is_headland_row(position.row)) {
    return HierAction::scout(even_col ? Move::Down : Move::Up);
  }
  const bool top = position.row < geometry.headland;
  const bool can_shift = position.col + 1 < geometry.cols;
  if (top) {
    if (even_col) return HierAction::scout(Move::Down);
    return HierAction::scout(can_shift ? Move::Right : Move::Down);
  }
  if (!even_col) return HierAction::scout(Move::Up);
  return HierAction::scout(can_shift ? Move::Right : Move::Up);
}

HierAction carpet_decide(const FieldGeometry& geometry, Cell position, bool sprayed_here) {
  if (geometry.is_interior(position) && !sprayed_here) return HierAction::deep_scout(true);
  return lawnmower_next(geometry, position);
}

HierAction reactive_decide(const FieldGeometry& geometry, Cell position, Health cell_health,
                           bool sprayed_here, double flip_p, Rng& rng) {
  if (geometry.is_interior(position) && !sprayed_here) {
    const bool indicator = is_infected(cell_health);
    const bool reads_infected = rng.bernoulli(flip_p) ? !indicator : indicator;
    if (reads_infected) return HierAction::deep_scout(true);
  }
  return lawnmower_next(geometry, position);
}

HierAction optimal_spray_decide(const FieldGeometry& geometry, const Observation& obs,
                                const ActorCritic& net, const ObsEncoder& encoder,
                                double mask_constant) {
  const bool sprayed_here = obs.sprayed.at(obs.position) != 0;
  if (geometry.is_interior(obs.position) && !sprayed_here) {
    const ActionMask mask = compute_masks(geometry, obs.position, sprayed_here);
    const double p_spray =
        conditional_spray_probability(net, encoder.encode(obs), mask, mask_constant);
    if (p_spray > 0.5) return HierAction::deep_scout(true);
  }
  return lawnmower_next(geometry, obs.position);
}

HierAction random_decide(const ActionMask& mask, Rng& rng) {
  std::vector<int> valid_types;
  for (int b = 0; b < kNumActionTypes; ++b) {
    if (mask.type_valid[b]) valid_types.push_back(b);
  }
  if (valid_types.empty()) throw std::invalid_argument("all action types are masked");
  const ActionType type = static_cast<ActionType>(
      valid_types[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(valid_types.size())))]);

  const int offset = type == ActionType::Scout ? 0 : kSpraySlotOffset;
  const int count = type == ActionType::Scout ? kNumMoves : kNumSpraySlots;
  std::vector<int> valid_params;
  for (int s = 0; s < count; ++s) {
    if (mask.low_valid[offset + s]) valid_params.push_back(s);
  }
  if (valid_params.empty())
    throw std::invalid_argument("all parameters of the sampled type are masked");
  const int param = valid_params[static_cast<std::size_t>(
      rng.uniform_int(static_cast<int>(valid_params.size())))];
  return HierAction{type, param};
}

}  // namespace hamppo
