#pragma once

#include "hamppo/action_tree.hpp"
#include "hamppo/field_env.hpp"
#include "hamppo/policy.hpp"

namespace hamppo {

// Serpentine coverage move: descend even columns, ascend odd columns, shift
// one column over on the headland between them. Stateless in the position
// parity, so interleaved deep scouts do not disturb the pattern. Bounces
// vertically once the last column is done.
HierAction lawnmower_next(const FieldGeometry& geometry, Cell position);

// Lawnmower movement, spraying every interior cell it stands on once.
HierAction carpet_decide(const FieldGeometry& geometry, Cell position, bool sprayed_here);

// Lawnmower movement with a flip-noised sensor read of the current cell:
// sprays iff the (possibly flipped) infection indicator reads infected and
// the cell is still unsprayed. The sensor is redrawn on every query.
HierAction reactive_decide(const FieldGeometry& geometry, Cell position, Health cell_health,
                           bool sprayed_here, double flip_p, Rng& rng);

// Lawnmower movement, spray decision delegated to a trained network's spray
// sub-policy with a 0.5 threshold.
HierAction optimal_spray_decide(const FieldGeometry& geometry, const Observation& obs,
                                const ActorCritic& net, const ObsEncoder& encoder,
                                double mask_constant = kDefaultMaskConstant);

// Uniform over valid types, then uniform over the valid parameters of the
// chosen type.
HierAction random_decide(const ActionMask& mask, Rng& rng);

}  // namespace hamppo
