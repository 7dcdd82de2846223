#include "hamppo/policy.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace hamppo {
namespace {

nlohmann::json layer_to_json(const LinearLayer& layer) {
  nlohmann::json j;
  j["rows"] = layer.W.rows();
  j["cols"] = layer.W.cols();
  j["W"] = std::vector<double>(layer.W.data(), layer.W.data() + layer.W.size());
  j["b"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
  return j;
}

LinearLayer layer_from_json(const nlohmann::json& j) {
  LinearLayer layer;
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto w = j.at("W").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
      static_cast<Eigen::Index>(b.size()) != rows)
    throw std::invalid_argument("layer payload does not match its shape");
  layer.W = Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols);
  layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
  return layer;
}

nlohmann::json mlp_to_json(const Mlp& mlp) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& layer : mlp.layers) j.push_back(layer_to_json(layer));
  return j;
}

void mlp_from_json(const nlohmann::json& j, Mlp& mlp) {
  if (j.size() != mlp.layers.size()) throw std::invalid_argument("tower depth mismatch");
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    LinearLayer loaded = layer_from_json(j[k]);
    if (loaded.W.rows() != mlp.layers[k].W.rows() || loaded.W.cols() != mlp.layers[k].W.cols())
      throw std::invalid_argument("tower layer shape mismatch");
    mlp.layers[k] = std::move(loaded);
  }
}

}  // namespace

Eigen::VectorXd ObsEncoder::encode(const Observation& obs) const {
  Eigen::VectorXd out(dim());
  encode_into(obs, out);
  return out;
}

void ObsEncoder::encode_into(const Observation& obs, Eigen::Ref<Eigen::VectorXd> out) const {
  const int rows = geometry_.rows();
  const int cols = geometry_.cols;
  if (obs.belief.rows() != rows || obs.belief.cols() != cols)
    throw std::invalid_argument("observation does not match encoder geometry");
  if (out.size() != dim()) throw std::invalid_argument("encoding buffer has the wrong size");

  const int cells = rows * cols;
  int offset = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c, ++offset) {
      out[offset] = obs.belief.at(r, c);
      out[cells + offset] = obs.visited.at(r, c) ? 1.0 : 0.0;
      out[2 * cells + offset] = obs.sprayed.at(r, c) ? 1.0 : 0.0;
      out[3 * cells + offset] = 0.0;
    }
  }
  out[3 * cells + obs.position.row * cols + obs.position.col] = 1.0;
  out[4 * cells] = obs.battery_fraction;
}

ActorCritic::ActorCritic(int input_dim, std::vector<int> hidden)
    : input_dim_(input_dim), hidden_(std::move(hidden)) {
  if (input_dim <= 0) throw std::invalid_argument("input dimension must be positive");
  if (hidden_.empty()) throw std::invalid_argument("at least one hidden layer is required");
  std::vector<int> widths;
  widths.push_back(input_dim_);
  widths.insert(widths.end(), hidden_.begin(), hidden_.end());
  policy_tower = Mlp(widths, /*relu_after_last=*/true);
  value_tower = Mlp(widths, /*relu_after_last=*/true);
  const int feature_dim = hidden_.back();
  type_head.W = Eigen::MatrixXd::Zero(kNumActionTypes, feature_dim);
  type_head.b = Eigen::VectorXd::Zero(kNumActionTypes);
  low_head.W = Eigen::MatrixXd::Zero(kNumLowSlots, feature_dim);
  low_head.b = Eigen::VectorXd::Zero(kNumLowSlots);
  value_head.W = Eigen::MatrixXd::Zero(1, feature_dim);
  value_head.b = Eigen::VectorXd::Zero(1);
}

void ActorCritic::init_params(std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0xAC);
  const double root2 = std::sqrt(2.0);
  policy_tower.init_orthogonal(rng, root2, root2);
  value_tower.init_orthogonal(rng, root2, root2);
  // Small policy-head gain keeps the initial action distribution near
  // uniform; unit gain on the value head.
  type_head.W = orthogonal_matrix(kNumActionTypes, static_cast<int>(type_head.W.cols()), rng, 0.01);
  type_head.b.setZero();
  low_head.W = orthogonal_matrix(kNumLowSlots, static_cast<int>(low_head.W.cols()), rng, 0.01);
  low_head.b.setZero();
  value_head.W = orthogonal_matrix(1, static_cast<int>(value_head.W.cols()), rng, 1.0);
  value_head.b.setZero();
}

ActorCritic::Output ActorCritic::forward(const Eigen::VectorXd& obs) const {
  if (obs.size() != input_dim_) throw std::invalid_argument("observation dimension mismatch");
  Output out;
  const Eigen::VectorXd fp = policy_tower.forward(obs.transpose()).row(0).transpose();
  const Eigen::VectorXd fv = value_tower.forward(obs.transpose()).row(0).transpose();
  Eigen::Map<Eigen::Vector2d>(out.type_logits.data()) = type_head.W * fp + type_head.b;
  Eigen::Map<Eigen::VectorXd>(out.low_logits.data(), kNumLowSlots) = low_head.W * fp + low_head.b;
  out.value = (value_head.W * fv + value_head.b)(0);
  return out;
}

void ActorCritic::forward_batch(const Eigen::MatrixXd& X, BatchForward& fwd) const {
  if (X.cols() != input_dim_) throw std::invalid_argument("batch dimension mismatch");
  fwd.features_p = policy_tower.forward(X, fwd.pcache);
  fwd.features_v = value_tower.forward(X, fwd.vcache);
  fwd.type_logits = (fwd.features_p * type_head.W.transpose()).rowwise() + type_head.b.transpose();
  fwd.low_logits = (fwd.features_p * low_head.W.transpose()).rowwise() + low_head.b.transpose();
  fwd.values = (fwd.features_v * value_head.W.transpose()).rowwise() + value_head.b.transpose();
}

void ActorCritic::backward_batch(const BatchForward& fwd, const Eigen::MatrixXd& d_type,
                                 const Eigen::MatrixXd& d_low, const Eigen::VectorXd& d_value,
                                 ActorCritic& grad) const {
  grad.type_head.W.noalias() += d_type.transpose() * fwd.features_p;
  grad.type_head.b.noalias() += d_type.colwise().sum().transpose();
  grad.low_head.W.noalias() += d_low.transpose() * fwd.features_p;
  grad.low_head.b.noalias() += d_low.colwise().sum().transpose();
  grad.value_head.W.noalias() += d_value.transpose() * fwd.features_v;
  grad.value_head.b(0) += d_value.sum();

  Eigen::MatrixXd d_fp = d_type * type_head.W + d_low * low_head.W;
  policy_tower.backward(fwd.pcache, d_fp, grad.policy_tower);
  Eigen::MatrixXd d_fv = d_value * value_head.W;
  value_tower.backward(fwd.vcache, d_fv, grad.value_tower);
}

ActorCritic ActorCritic::zeros_like() const {
  ActorCritic z(input_dim_, hidden_);
  return z;
}

std::vector<TensorSpan> ActorCritic::tensor_spans() {
  std::vector<TensorSpan> spans;
  for (auto s : hamppo::tensor_spans(policy_tower)) spans.push_back(s);
  for (auto s : hamppo::tensor_spans(type_head)) spans.push_back(s);
  for (auto s : hamppo::tensor_spans(low_head)) spans.push_back(s);
  for (auto s : hamppo::tensor_spans(value_tower)) spans.push_back(s);
  for (auto s : hamppo::tensor_spans(value_head)) spans.push_back(s);
  return spans;
}

nlohmann::json ActorCritic::to_json() const {
  nlohmann::json j;
  j["input_dim"] = input_dim_;
  j["hidden"] = hidden_;
  j["policy_tower"] = mlp_to_json(policy_tower);
  j["value_tower"] = mlp_to_json(value_tower);
  j["type_head"] = layer_to_json(type_head);
  j["low_head"] = layer_to_json(low_head);
  j["value_head"] = layer_to_json(value_head);
  return j;
}

ActorCritic ActorCritic::from_json(const nlohmann::json& j) {
  ActorCritic net(j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>());
  mlp_from_json(j.at("policy_tower"), net.policy_tower);
  mlp_from_json(j.at("value_tower"), net.value_tower);
  net.type_head = layer_from_json(j.at("type_head"));
  net.low_head = layer_from_json(j.at("low_head"));
  net.value_head = layer_from_json(j.at("value_head"));
  return net;
}

SampledAction act_sample(const ActorCritic& net, const Eigen::VectorXd& obs,
                         const ActionMask& mask, double mask_constant, Rng& rng) {
  const auto out = net.forward(obs);
  return sample_hierarchical(out.type_logits, out.low_logits, mask, mask_constant, rng);
}

HierAction act_greedy(const ActorCritic& net, const Eigen::VectorXd& obs,
                      const ActionMask& mask) {
  const auto out = net.forward(obs);
  return greedy_action(out.type_logits, out.low_logits, mask);
}

double spray_hint_probability(const ActorCritic& net, const Eigen::VectorXd& obs,
                              const ActionMask& mask, double mask_constant) {
  if (!mask.type_valid[static_cast<int>(ActionType::DeepScout)]) return 0.0;
  const auto out = net.forward(obs);
  const HierProbs probs = hierarchical_probs(out.type_logits, out.low_logits, mask, mask_constant);
  return probs.type[static_cast<int>(ActionType::DeepScout)] * probs.spray[0];
}

double conditional_spray_probability(const ActorCritic& net, const Eigen::VectorXd& obs,
                                     const ActionMask& mask, double mask_constant) {
  if (!mask.type_valid[static_cast<int>(ActionType::DeepScout)]) return 0.0;
  const auto out = net.forward(obs);
  const HierProbs probs = hierarchical_probs(out.type_logits, out.low_logits, mask, mask_constant);
  return probs.spray[0];
}

}  // namespace hamppo
