#pragma once

#include <array>
#include <span>
#include <vector>

#include "hamppo/grid.hpp"
#include "hamppo/rng.hpp"

namespace hamppo {

enum class ActionType : int { Scout = 0, DeepScout = 1 };
enum class Move : int { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr int kNumActionTypes = 2;
inline constexpr int kNumMoves = 4;
inline constexpr int kNumSpraySlots = 2;
inline constexpr int kNumLowSlots = kNumMoves + kNumSpraySlots;
inline constexpr int kSpraySlotOffset = kNumMoves;
inline constexpr double kDefaultMaskConstant = -1e10;

// Two-level action: the type selects which family the discrete parameter is
// read from. Scout parameters are moves; deep-scout parameters are the spray
// decision (0 spray, 1 no spray). The two families are mutually exclusive
// slices of one six-slot low-level head.
struct HierAction {
  ActionType type = ActionType::Scout;
  int param = 0;

  static HierAction scout(Move m) { return {ActionType::Scout, static_cast<int>(m)}; }
  static HierAction deep_scout(bool spray) { return {ActionType::DeepScout, spray ? 0 : 1}; }

  Move move() const {
    if (type != ActionType::Scout) throw std::logic_error("move() on a deep-scout action");
    return static_cast<Move>(param);
  }
  bool spray() const {
    if (type != ActionType::DeepScout) throw std::logic_error("spray() on a scout action");
    return param == 0;
  }
  // Index into the flat six-slot low-level head.
  int low_slot() const {
    return type == ActionType::Scout ? param : kSpraySlotOffset + param;
  }

  bool operator==(const HierAction&) const = default;
};

Cell move_destination(Cell from, Move m);

// Validity masks for both tree levels. The low mask packs the four move slots
// followed by the two spray slots; the slice relevant to a sampled type is
// selected by that type.
struct ActionMask {
  std::array<bool, kNumActionTypes> type_valid{true, true};
  std::array<bool, kNumLowSlots> low_valid{};

  bool allows(const HierAction& a) const {
    return type_valid[static_cast<int>(a.type)] && low_valid[a.low_slot()];
  }

  bool operator==(const ActionMask&) const = default;
};

// Mask rules: up/down are valid unless off-grid, lateral moves only on the
// headland, deep scout only on unsprayed interior (non-empty) cells. Scout
// stays valid everywhere because every cell has a vertical neighbor.
ActionMask compute_masks(const FieldGeometry& geometry, Cell position, bool sprayed_here);

// Softmax with invalid logits replaced by the mask constant. Masked entries
// come out with probability < 1e-9 (exactly 0 for the default constant).
std::vector<double> mask_and_normalize(std::span<const double> logits,
                                       std::span<const bool> valid,
                                       double mask_constant = kDefaultMaskConstant);

// Stable log softmax of the masked logits at one index.
double masked_log_prob(std::span<const double> logits, std::span<const bool> valid, int index,
                       double mask_constant = kDefaultMaskConstant);

double entropy_of(std::span<const double> probs);

// Gradient of the masked log softmax at `chosen` w.r.t. the raw logits:
// onehot - probabilities, exactly zero at masked entries (their logit never
// reaches the output).
std::vector<double> masked_log_softmax_grad(std::span<const double> logits,
                                            std::span<const bool> valid, int chosen,
                                            double mask_constant = kDefaultMaskConstant);

// Exact entropy of a two-level tree distribution by the chain rule:
// H(type) + sum_b P(type=b) * H(sub distribution of b).
double hierarchical_entropy(std::span<const double> type_probs,
                            std::span<const std::vector<double>> sub_probs);

using TypeLogits = std::array<double, kNumActionTypes>;
using LowLogits = std::array<double, kNumLowSlots>;

// Masked probabilities of both levels. The spray/move sub-vectors are each
// normalized within their own slice.
struct HierProbs {
  std::array<double, kNumActionTypes> type{};
  std::array<double, kNumMoves> move{};
  std::array<double, kNumSpraySlots> spray{};
};
HierProbs hierarchical_probs(const TypeLogits& type_logits, const LowLogits& low_logits,
                             const ActionMask& mask, double mask_constant = kDefaultMaskConstant);

struct SampledAction {
  HierAction action;
  double log_prob = 0.0;
};

// Sample the type from the masked type distribution, then the parameter from
// the masked slice the type selects. The mask-selection terms are
// deterministic given state and type, so the log probability is the sum of
// the two categorical log probabilities.
SampledAction sample_hierarchical(const TypeLogits& type_logits, const LowLogits& low_logits,
                                  const ActionMask& mask, double mask_constant, Rng& rng);

struct ActionScore {
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Log probability of a concrete action plus the exact entropy of the full
// tree distribution. Throws if the action is invalid under the mask.
ActionScore log_prob_and_entropy(const TypeLogits& type_logits, const LowLogits& low_logits,
                                 const ActionMask& mask, const HierAction& action,
                                 double mask_constant = kDefaultMaskConstant);

// Argmax at both levels, restricted to valid entries.
HierAction greedy_action(const TypeLogits& type_logits, const LowLogits& low_logits,
                         const ActionMask& mask);

}  // namespace hamppo
