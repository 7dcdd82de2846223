#pragma once

#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "hamppo/action_tree.hpp"
#include "hamppo/field_env.hpp"
#include "hamppo/net.hpp"

namespace hamppo {

// Flattens an observation into the fixed network input layout:
// [belief | visited | sprayed | position one-hot | battery fraction],
// all grids row-major.
class ObsEncoder {
 public:
  explicit ObsEncoder(const FieldGeometry& geometry) : geometry_(geometry) {
    geometry_.validate();
  }

  int dim() const { return 4 * geometry_.rows() * geometry_.cols + 1; }
  const FieldGeometry& geometry() const { return geometry_; }

  Eigen::VectorXd encode(const Observation& obs) const;
  void encode_into(const Observation& obs, Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  FieldGeometry geometry_;
};

inline const std::vector<int>& default_hidden_widths() {
  static const std::vector<int> widths{256, 128, 128, 64};
  return widths;
}

// Actor-critic with separate policy and value towers and three heads: action
// type (2 logits), flat low-level parameters (6 logits) and the state value.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(int input_dim, std::vector<int> hidden);
  static ActorCritic make_default(int input_dim) {
    return ActorCritic(input_dim, default_hidden_widths());
  }

  void init_params(std::uint64_t seed);

  struct Output {
    TypeLogits type_logits{};
    LowLogits low_logits{};
    double value = 0.0;
  };
  Output forward(const Eigen::VectorXd& obs) const;

  struct BatchForward {
    Eigen::MatrixXd features_p, features_v;
    Eigen::MatrixXd type_logits;  // N x 2
    Eigen::MatrixXd low_logits;   // N x 6
    Eigen::VectorXd values;       // N
    MlpCache pcache, vcache;
  };
  void forward_batch(const Eigen::MatrixXd& X, BatchForward& fwd) const;
  void backward_batch(const BatchForward& fwd, const Eigen::MatrixXd& d_type,
                      const Eigen::MatrixXd& d_low, const Eigen::VectorXd& d_value,
                      ActorCritic& grad) const;

  ActorCritic zeros_like() const;
  std::vector<TensorSpan> tensor_spans();

  int input_dim() const { return input_dim_; }
  const std::vector<int>& hidden_widths() const { return hidden_; }

  nlohmann::json to_json() const;
  static ActorCritic from_json(const nlohmann::json& j);

  Mlp policy_tower, value_tower;
  LinearLayer type_head, low_head, value_head;

 private:
  int input_dim_ = 0;
  std::vector<int> hidden_;
};

SampledAction act_sample(const ActorCritic& net, const Eigen::VectorXd& obs,
                         const ActionMask& mask, double mask_constant, Rng& rng);
HierAction act_greedy(const ActorCritic& net, const Eigen::VectorXd& obs, const ActionMask& mask);

// Probability that this policy sprays the observed cell on its next action:
// P(deep scout) * P(spray | deep scout) under the masks.
double spray_hint_probability(const ActorCritic& net, const Eigen::VectorXd& obs,
                              const ActionMask& mask,
                              double mask_constant = kDefaultMaskConstant);
// P(spray | deep scout) alone.
double conditional_spray_probability(const ActorCritic& net, const Eigen::VectorXd& obs,
                                     const ActionMask& mask,
                                     double mask_constant = kDefaultMaskConstant);

}  // namespace hamppo
