#include "hamppo/action_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hamppo {
namespace {

// Slice of the low-level logits/mask selected by an action type.
struct LowSlice {
  int offset;
  int count;
};

LowSlice low_slice(ActionType type) {
  return type == ActionType::Scout ? LowSlice{0, kNumMoves}
                                   : LowSlice{kSpraySlotOffset, kNumSpraySlots};
}

}  // namespace

Cell move_destination(Cell from, Move m) {
  switch (m) {
    case Move::Up: return {from.row - 1, from.col};
    case Move::Down: return {from.row + 1, from.col};
    case Move::Left: return {from.row, from.col - 1};
    case Move::Right: return {from.row, from.col + 1};
  }
  throw std::logic_error("unreachable move value");
}

ActionMask compute_masks(const FieldGeometry& geometry, Cell position, bool sprayed_here) {
  if (!geometry.contains(position)) throw std::invalid_argument("position is off-grid");
  ActionMask mask;
  const bool on_headland = geometry.is_headland_row(position.row);
  for (int m = 0; m < kNumMoves; ++m) {
    const Cell dest = move_destination(position, static_cast<Move>(m));
    bool valid = geometry.contains(dest);
    if ((static_cast<Move>(m) == Move::Left || static_cast<Move>(m) == Move::Right) &&
        !on_headland)
      valid = false;
    mask.low_valid[m] = valid;
  }

  const bool deep_scout_ok = !on_headland && !sprayed_here;
  mask.type_valid[static_cast<int>(ActionType::DeepScout)] = deep_scout_ok;
  mask.low_valid[kSpraySlotOffset] = deep_scout_ok;
  mask.low_valid[kSpraySlotOffset + 1] = deep_scout_ok;

  const bool any_move = mask.low_valid[0] || mask.low_valid[1] || mask.low_valid[2] ||
                        mask.low_valid[3];
  mask.type_valid[static_cast<int>(ActionType::Scout)] = any_move;
  return mask;
}

std::vector<double> mask_and_normalize(std::span<const double> logits,
                                       std::span<const bool> valid, double mask_constant) {
  if (logits.size() != valid.size())
    throw std::invalid_argument("logits and mask sizes differ");
  bool any_valid = false;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!valid[i]) continue;
    any_valid = true;
    max_logit = std::max(max_logit, logits[i]);
  }
  if (!any_valid) throw std::invalid_argument("all entries are masked");

  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = valid[i] ? logits[i] : mask_constant;
    probs[i] = std::exp(z - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double masked_log_prob(std::span<const double> logits, std::span<const bool> valid, int index,
                       double mask_constant) {
  if (index < 0 || static_cast<std::size_t>(index) >= logits.size())
    throw std::invalid_argument("log prob index out of range");
  bool any_valid = false;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!valid[i]) continue;
    any_valid = true;
    max_logit = std::max(max_logit, logits[i]);
  }
  if (!any_valid) throw std::invalid_argument("all entries are masked");

  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = valid[i] ? logits[i] : mask_constant;
    sum += std::exp(z - max_logit);
  }
  const double z_index = valid[index] ? logits[index] : mask_constant;
  return z_index - max_logit - std::log(sum);
}

double entropy_of(std::span<const double> probs) {
  double entropy = 0.0;
  for (const double p : probs) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

std::vector<double> masked_log_softmax_grad(std::span<const double> logits,
                                            std::span<const bool> valid, int chosen,
                                            double mask_constant) {
  if (chosen < 0 || static_cast<std::size_t>(chosen) >= logits.size() || !valid[chosen])
    throw std::invalid_argument("chosen index must be a valid entry");
  const std::vector<double> probs = mask_and_normalize(logits, valid, mask_constant);
  std::vector<double> grad(logits.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!valid[i]) continue;
    grad[i] = (static_cast<int>(i) == chosen ? 1.0 : 0.0) - probs[i];
  }
  return grad;
}

double hierarchical_entropy(std::span<const double> type_probs,
                            std::span<const std::vector<double>> sub_probs) {
  if (type_probs.size() != sub_probs.size())
    throw std::invalid_argument("one sub distribution per type is required");
  double entropy = entropy_of(type_probs);
  for (std::size_t b = 0; b < type_probs.size(); ++b) {
    if (type_probs[b] > 0.0) entropy += type_probs[b] * entropy_of(sub_probs[b]);
  }
  return entropy;
}

HierProbs hierarchical_probs(const TypeLogits& type_logits, const LowLogits& low_logits,
                             const ActionMask& mask, double mask_constant) {
  HierProbs out;
  const auto type = mask_and_normalize(type_logits, mask.type_valid, mask_constant);
  std::copy(type.begin(), type.end(), out.type.begin());

  for (const ActionType t : {ActionType::Scout, ActionType::DeepScout}) {
    if (!mask.type_valid[static_cast<int>(t)]) continue;
    const auto slice = low_slice(t);
    const auto probs =
        mask_and_normalize(std::span(low_logits).subspan(slice.offset, slice.count),
                           std::span(mask.low_valid).subspan(slice.offset, slice.count),
                           mask_constant);
    if (t == ActionType::Scout) {
      std::copy(probs.begin(), probs.end(), out.move.begin());
    } else {
      std::copy(probs.begin(), probs.end(), out.spray.begin());
    }
  }
  return out;
}

SampledAction sample_hierarchical(const TypeLogits& type_logits, const LowLogits& low_logits,
                                  const ActionMask& mask, double mask_constant, Rng& rng) {
  const auto type_probs = mask_and_normalize(type_logits, mask.type_valid, mask_constant);
  const int type_index = rng.categorical(type_probs);
  const ActionType type = static_cast<ActionType>(type_index);

  const auto slice = low_slice(type);
  const auto sub_probs =
      mask_and_normalize(std::span(low_logits).subspan(slice.offset, slice.count),
                         std::span(mask.low_valid).subspan(slice.offset, slice.count),
                         mask_constant);
  const int param = rng.categorical(sub_probs);

  SampledAction sampled;
  sampled.action = HierAction{type, param};
  sampled.log_prob =
      masked_log_prob(type_logits, mask.type_valid, type_index, mask_constant) +
      masked_log_prob(std::span(low_logits).subspan(slice.offset, slice.count),
                      std::span(mask.low_valid).subspan(slice.offset, slice.count), param,
                      mask_constant);
  return sampled;
}

ActionScore log_prob_and_entropy(const TypeLogits& type_logits, const LowLogits& low_logits,
                                 const ActionMask& mask, const HierAction& action,
                                 double mask_constant) {
  if (!mask.allows(action)) throw std::invalid_argument("action is invalid under the mask");

  const auto slice = low_slice(action.type);
  ActionScore score;
  score.log_prob =
      masked_log_prob(type_logits, mask.type_valid, static_cast<int>(action.type),
                      mask_constant) +
      masked_log_prob(std::span(low_logits).subspan(slice.offset, slice.count),
                      std::span(mask.low_valid).subspan(slice.offset, slice.count), action.param,
                      mask_constant);

  const auto type_probs = mask_and_normalize(type_logits, mask.type_valid, mask_constant);
  std::vector<std::vector<double>> sub_probs(kNumActionTypes);
  for (const ActionType t : {ActionType::Scout, ActionType::DeepScout}) {
    const int b = static_cast<int>(t);
    if (type_probs[b] <= 0.0) {
      sub_probs[b] = {1.0};
      continue;
    }
    const auto s = low_slice(t);
    sub_probs[b] = mask_and_normalize(std::span(low_logits).subspan(s.offset, s.count),
                                      std::span(mask.low_valid).subspan(s.offset, s.count),
                                      mask_constant);
  }
  score.entropy = hierarchical_entropy(type_probs, sub_probs);
  return score;
}

HierAction greedy_action(const TypeLogits& type_logits, const LowLogits& low_logits,
                         const ActionMask& mask) {
  int best_type = -1;
  for (int b = 0; b < kNumActionTypes; ++b) {
    if (!mask.type_valid[b]) continue;
    if (best_type < 0 || type_logits[b] > type_logits[best_type]) best_type = b;
  }
  if (best_type < 0) throw std::invalid_argument("all action types are masked");

  const auto slice = low_slice(static_cast<ActionType>(best_type));
  int best_param = -1;
  for (int i = 0; i < slice.count; ++i) {
    if (!mask.low_valid[slice.offset + i]) continue;
    if (best_param < 0 || low_logits[slice.offset + i] > low_logits[slice.offset + best_param])
      best_param = i;
  }
  if (best_param < 0) throw std::invalid_argument("all parameters of the chosen type are masked");
  return HierAction{static_cast<ActionType>(best_type), best_param};
}

}  // namespace hamppo
