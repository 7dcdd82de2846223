#include "hamppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hamppo {
namespace {

constexpr std::uint64_t kSampleStream = 7;
constexpr int kCheckpointVersion = 1;

void shuffle_indices(std::vector<int>& indices, Rng& rng) {
  for (int i = static_cast<int>(indices.size()) - 1; i > 0; --i) {
    std::swap(indices[i], indices[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (rollout_length <= 0) throw std::invalid_argument("rollout_length must be positive");
  if (minibatch <= 0 || minibatch > rollout_length)
    throw std::invalid_argument("minibatch must be in [1, rollout_length]");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in [0, 1]");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0, 1]");
  if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("epsilon must be in (0, 1)");
  if (entropy_coef < 0.0) throw std::invalid_argument("entropy_coef must be >= 0");
  if (value_coef < 0.0) throw std::invalid_argument("value_coef must be >= 0");
  if (grad_norm_clip <= 0.0) throw std::invalid_argument("grad_norm_clip must be positive");
  if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  if (mask_constant >= 0.0) throw std::invalid_argument("mask_constant must be negative");
}

GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<std::uint8_t>& dones, double bootstrap_value, double gamma,
              double lambda) {
  const std::size_t horizon = rewards.size();
  if (values.size() != horizon || dones.size() != horizon)
    throw std::invalid_argument("gae inputs must have equal length");
  GaeResult result;
  result.advantages.resize(horizon);
  result.returns.resize(horizon);
  double acc = 0.0;
  for (std::size_t idx = horizon; idx-- > 0;) {
    const double not_done = dones[idx] ? 0.0 : 1.0;
    const double next_value = idx + 1 < horizon ? values[idx + 1] : bootstrap_value;
    const double delta = rewards[idx] + gamma * next_value * not_done - values[idx];
    acc = delta + gamma * lambda * not_done * acc;
    result.advantages[idx] = acc;
    result.returns[idx] = acc + values[idx];
  }
  return result;
}

double ppo_clip_term(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double ppo_clip_term_dratio(double ratio, double advantage, double epsilon) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  if (unclipped <= clipped) return advantage;
  // Clipped branch active: flat outside the trust interval.
  return (ratio > 1.0 - epsilon && ratio < 1.0 + epsilon) ? advantage : 0.0;
}

RolloutBuffer::RolloutBuffer(int capacity, int obs_dim) : capacity_(capacity) {
  if (capacity <= 0 || obs_dim <= 0)
    throw std::invalid_argument("buffer capacity and observation dim must be positive");
  obs_ = Eigen::MatrixXd::Zero(capacity, obs_dim);
  actions_.resize(capacity);
  masks_.resize(capacity);
  log_probs_.resize(capacity);
  values_.resize(capacity);
  rewards_.resize(capacity);
  hints_.resize(capacity);
  dones_.resize(capacity);
}

void RolloutBuffer::add(const Eigen::VectorXd& obs, const HierAction& action,
                        const ActionMask& mask, double log_prob, double value, double reward,
                        bool done, double hint) {
  if (full()) throw std::logic_error("rollout buffer is full");
  if (obs.size() != obs_.cols()) throw std::invalid_argument("observation dim mismatch");
  obs_.row(size_) = obs.transpose();
  actions_[size_] = action;
  masks_[size_] = mask;
  log_probs_[size_] = log_prob;
  values_[size_] = value;
  rewards_[size_] = reward;
  dones_[size_] = done ? 1 : 0;
  hints_[size_] = hint;
  ++size_;
}

void RolloutBuffer::compute_gae(double bootstrap_value, double gamma, double lambda) {
  if (!full()) throw std::logic_error("advantages are computed over a complete buffer");
  GaeResult result = gae(rewards_, values_, dones_, bootstrap_value, gamma, lambda);
  advantages_ = std::move(result.advantages);
  returns_ = std::move(result.returns);
}

LossStats ppo_loss(const ActorCritic& net, const RolloutBuffer& buffer,
                   const std::vector<int>& batch, const TrainConfig& config, ActorCritic* grad) {
  const int batch_size = static_cast<int>(batch.size());
  if (batch_size == 0) throw std::invalid_argument("empty minibatch");
  if (buffer.advantages().empty())
    throw std::logic_error("advantages must be computed before the update");

  Eigen::MatrixXd X(batch_size, buffer.observations().cols());
  for (int i = 0; i < batch_size; ++i) X.row(i) = buffer.observations().row(batch[i]);

  ActorCritic::BatchForward fwd;
  net.forward_batch(X, fwd);

  std::vector<double> advantages(batch_size);
  for (int i = 0; i < batch_size; ++i) advantages[i] = buffer.advantages()[batch[i]];
  if (config.normalize_advantages) {
    double mean = 0.0;
    for (const double a : advantages) mean += a;
    mean /= batch_size;
    double var = 0.0;
    for (const double a : advantages) var += (a - mean) * (a - mean);
    const double std_dev = std::sqrt(var / batch_size);
    for (double& a : advantages) a = (a - mean) / (std_dev + 1e-8);
  }

  Eigen::MatrixXd d_type = Eigen::MatrixXd::Zero(batch_size, kNumActionTypes);
  Eigen::MatrixXd d_low = Eigen::MatrixXd::Zero(batch_size, kNumLowSlots);
  Eigen::VectorXd d_value = Eigen::VectorXd::Zero(batch_size);

  LossStats stats;
  const double inv_batch = 1.0 / batch_size;
  for (int i = 0; i < batch_size; ++i) {
    const int row = batch[i];
    const ActionMask& mask = buffer.masks()[row];
    const HierAction& action = buffer.actions()[row];

    TypeLogits type_logits;
    for (int j = 0; j < kNumActionTypes; ++j) type_logits[j] = fwd.type_logits(i, j);
    LowLogits low_logits;
    for (int j = 0; j < kNumLowSlots; ++j) low_logits[j] = fwd.low_logits(i, j);

    const auto type_probs = mask_and_normalize(type_logits, mask.type_valid,
                                               config.mask_constant);
    const int chosen_type = static_cast<int>(action.type);
    const int slice_offset = action.type == ActionType::Scout ? 0 : kSpraySlotOffset;
    const int slice_count = action.type == ActionType::Scout ? kNumMoves : kNumSpraySlots;

    // Per-branch masked sub-distributions; both enter the entropy term.
    std::array<std::vector<double>, kNumActionTypes> sub_probs;
    std::array<double, kNumActionTypes> sub_entropy{0.0, 0.0};
    for (int b = 0; b < kNumActionTypes; ++b) {
      if (type_probs[b] <= 0.0) continue;
      const int off = b == 0 ? 0 : kSpraySlotOffset;
      const int cnt = b == 0 ? kNumMoves : kNumSpraySlots;
      sub_probs[b] = mask_and_normalize(std::span(low_logits).subspan(off, cnt),
                                        std::span(mask.low_valid).subspan(off, cnt),
                                        config.mask_constant);
      sub_entropy[b] = entropy_of(sub_probs[b]);
    }
    const double type_entropy = entropy_of(type_probs);
    double mean_sub_entropy = 0.0;
    for (int b = 0; b < kNumActionTypes; ++b) mean_sub_entropy += type_probs[b] * sub_entropy[b];
    const double entropy = type_entropy + mean_sub_entropy;

    const double log_prob =
        masked_log_prob(type_logits, mask.type_valid, chosen_type, config.mask_constant) +
        masked_log_prob(std::span(low_logits).subspan(slice_offset, slice_count),
                        std::span(mask.low_valid).subspan(slice_offset, slice_count),
                        action.param, config.mask_constant);

    const double ratio = std::exp(log_prob - buffer.log_probs()[row]);
    const double adv = advantages[i];
    const double value_error = fwd.values(i) - buffer.returns()[row];

    stats.policy_loss += -ppo_clip_term(ratio, adv, config.epsilon) * inv_batch;
    stats.value_loss += value_error * value_error * inv_batch;
    stats.entropy += entropy * inv_batch;

    const double d_log_prob =
        -ppo_clip_term_dratio(ratio, adv, config.epsilon) * ratio * inv_batch;
    const double d_entropy = -config.entropy_coef * inv_batch;
    d_value(i) = 2.0 * config.value_coef * value_error * inv_batch;

    for (int j = 0; j < kNumActionTypes; ++j) {
      const double p = type_probs[j];
      if (p <= 0.0) continue;
      const double onehot = j == chosen_type ? 1.0 : 0.0;
      const double dh = -p * (std::log(p) + type_entropy) + p * (sub_entropy[j] - mean_sub_entropy);
      d_type(i, j) = d_log_prob * (onehot - p) + d_entropy * dh;
    }
    for (int b = 0; b < kNumActionTypes; ++b) {
      if (type_probs[b] <= 0.0) continue;
      const int off = b == 0 ? 0 : kSpraySlotOffset;
      for (std::size_t s = 0; s < sub_probs[b].size(); ++s) {
        const double p = sub_probs[b][s];
        if (p <= 0.0) continue;
        double value = 0.0;
        if (b == chosen_type) {
          const double onehot = static_cast<int>(s) == action.param ? 1.0 : 0.0;
          value += d_log_prob * (onehot - p);
        }
        value += d_entropy * type_probs[b] * (-p * (std::log(p) + sub_entropy[b]));
        d_low(i, off + static_cast<int>(s)) = value;
      }
    }
  }

  stats.total = stats.policy_loss + config.value_coef * stats.value_loss -
                config.entropy_coef * stats.entropy;
  if (!std::isfinite(stats.total)) {
    std::ostringstream msg;
    msg << "non-finite loss: policy=" << stats.policy_loss << " value=" << stats.value_loss
        << " entropy=" << stats.entropy;
    throw std::runtime_error(msg.str());
  }

  if (grad != nullptr) net.backward_batch(fwd, d_type, d_low, d_value, *grad);
  return stats;
}

std::string TrainLogRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["update"] = update;
  j["steps"] = steps;
  j["mean_reward"] = mean_reward;
  j["policy_loss"] = policy_loss;
  j["value_loss"] = value_loss;
  j["entropy"] = entropy;
  j["grad_norm"] = grad_norm;
  return j.dump();
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "hamppo-checkpoint";
  j["version"] = kCheckpointVersion;
  j["net"] = net.to_json();
  j["geometry"] = {{"interior_rows", geometry.interior_rows},
                   {"cols", geometry.cols},
                   {"headland", geometry.headland}};
  j["adam_m"] = adam_m;
  j["adam_v"] = adam_v;
  j["adam_steps"] = adam_steps;
  j["sample_rng_state"] = sample_rng_state;
  j["steps_done"] = steps_done;
  j["episodes_done"] = episodes_done;

  const std::vector<std::uint8_t> blob = nlohmann::json::to_cbor(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  const std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  nlohmann::json j = nlohmann::json::from_cbor(blob);
  if (j.value("format", "") != std::string("hamppo-checkpoint"))
    throw std::runtime_error("not a checkpoint file: " + path);
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version");

  Checkpoint ck;
  ck.net = ActorCritic::from_json(j.at("net"));
  ck.geometry.interior_rows = j.at("geometry").at("interior_rows").get<int>();
  ck.geometry.cols = j.at("geometry").at("cols").get<int>();
  ck.geometry.headland = j.at("geometry").at("headland").get<int>();
  ck.adam_m = j.at("adam_m").get<std::vector<double>>();
  ck.adam_v = j.at("adam_v").get<std::vector<double>>();
  ck.adam_steps = j.at("adam_steps").get<long>();
  ck.sample_rng_state = j.at("sample_rng_state").get<std::array<std::uint64_t, 4>>();
  ck.steps_done = j.at("steps_done").get<long long>();
  ck.episodes_done = j.at("episodes_done").get<long long>();
  return ck;
}

Trainer::Trainer(std::vector<ScenarioConfig> scenarios, RewardParams rewards, TrainConfig config)
    : scenarios_(std::move(scenarios)),
      rewards_(std::move(rewards)),
      config_(config),
      encoder_([&] {
        if (scenarios_.empty()) throw std::invalid_argument("at least one scenario is required");
        return ObsEncoder(scenarios_.front().geometry);
      }()),
      optimizer_(config.learning_rate) {
  config_.validate();
  rewards_.validate();
  for (const auto& scenario : scenarios_) {
    scenario.validate();
    if (!(scenario.geometry == scenarios_.front().geometry))
      throw std::invalid_argument("all training scenarios must share one field geometry");
  }
  net_ = ActorCritic::make_default(encoder_.dim());
  net_.init_params(config_.seed);
  optimizer_.attach(net_.tensor_spans());
  sample_rng_ = Rng::derive(config_.seed, kSampleStream);
}

void Trainer::restore(const Checkpoint& checkpoint) {
  if (!(checkpoint.geometry == encoder_.geometry()))
    throw std::invalid_argument("checkpoint geometry does not match the scenario geometry");
  if (checkpoint.net.input_dim() != encoder_.dim() ||
      checkpoint.net.hidden_widths() != net_.hidden_widths())
    throw std::invalid_argument("checkpoint architecture does not match");
  net_ = checkpoint.net;
  optimizer_.attach(net_.tensor_spans());
  optimizer_.restore(checkpoint.adam_m, checkpoint.adam_v, checkpoint.adam_steps);
  sample_rng_.set_state(checkpoint.sample_rng_state);
  steps_done_ = checkpoint.steps_done;
  episodes_done_ = checkpoint.episodes_done;
  env_.reset();
  env_done_ = true;
  episode_reward_ = 0.0;
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ck;
  ck.net = net_;
  ck.geometry = encoder_.geometry();
  ck.adam_m = optimizer_.first_moment();
  ck.adam_v = optimizer_.second_moment();
  ck.adam_steps = optimizer_.step_count();
  ck.sample_rng_state = sample_rng_.state();
  ck.steps_done = steps_done_;
  ck.episodes_done = episodes_done_;
  return ck;
}

void Trainer::ensure_env() {
  if (env_ && !env_done_) return;
  const int pick = scenarios_.size() > 1
                       ? sample_rng_.uniform_int(static_cast<int>(scenarios_.size()))
                       : 0;
  env_.emplace(scenarios_[static_cast<std::size_t>(pick)], rewards_);
  const std::uint64_t episode_seed = sample_rng_.next_u64();
  const Observation obs = env_->reset(episode_seed);
  current_obs_ = encoder_.encode(obs);
  env_done_ = env_->done();
  episode_reward_ = 0.0;
  ++episodes_done_;
}

double Trainer::collect_rollout(RolloutBuffer& buffer) {
  buffer.clear();
  const FieldGeometry geometry = encoder_.geometry();
  while (!buffer.full()) {
    ensure_env();
    const ActionMask mask = env_->masks();
    const auto out = net_.forward(current_obs_);
    const SampledAction sampled = sample_hierarchical(out.type_logits, out.low_logits, mask,
                                                      config_.mask_constant, sample_rng_);

    double used_hint = 0.0;
    const auto provider = [&](const Observation& post_move) {
      const Eigen::VectorXd x = encoder_.encode(post_move);
      const ActionMask post_mask = compute_masks(geometry, post_move.position,
                                                 post_move.sprayed.at(post_move.position) != 0);
      used_hint = spray_hint_probability(net_, x, post_mask, config_.mask_constant);
      return used_hint;
    };
    const StepOutcome outcome = env_->step(sampled.action, FieldEnv::SprayHintFn(provider));

    buffer.add(current_obs_, sampled.action, mask, sampled.log_prob, out.value, outcome.reward,
               outcome.done, used_hint);
    episode_reward_ += outcome.reward;
    current_obs_ = encoder_.encode(outcome.observation);
    env_done_ = outcome.done;
    if (env_done_) {
      finished_episode_rewards_.push_back(episode_reward_);
      episode_reward_ = 0.0;
    }
    ++steps_done_;
  }
  const double bootstrap = env_done_ ? 0.0 : net_.forward(current_obs_).value;
  buffer.compute_gae(bootstrap, config_.gamma, config_.lambda);
  if (!finished_episode_rewards_.empty()) {
    double sum = 0.0;
    for (const double r : finished_episode_rewards_) sum += r;
    return sum / static_cast<double>(finished_episode_rewards_.size());
  }
  return last_mean_reward_;
}

void Trainer::train(long long steps, std::ostream* log, const std::string& checkpoint_dir) {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  RolloutBuffer buffer(config_.rollout_length, encoder_.dim());
  ActorCritic grad = net_.zeros_like();
  std::vector<int> indices(static_cast<std::size_t>(config_.rollout_length));
  const long long target = steps_done_ + steps;

  while (steps_done_ < target) {
    finished_episode_rewards_.clear();
    const double mean_reward = collect_rollout(buffer);
    last_mean_reward_ = mean_reward;

    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);

    LossStats accumulated;
    double grad_norm_sum = 0.0;
    int batches = 0;
    std::vector<int> batch(static_cast<std::size_t>(config_.minibatch));
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      shuffle_indices(indices, sample_rng_);
      for (int start = 0; start + config_.minibatch <= config_.rollout_length;
           start += config_.minibatch) {
        std::copy(indices.begin() + start, indices.begin() + start + config_.minibatch,
                  batch.begin());
        zero_tensors(grad.tensor_spans());
        const LossStats stats = ppo_loss(net_, buffer, batch, config_, &grad);

        const auto grad_spans = grad.tensor_spans();
        const double norm = global_norm(grad_spans);
        if (norm > config_.grad_norm_clip && norm > 0.0)
          scale_tensors(grad_spans, config_.grad_norm_clip / norm);
        optimizer_.step(net_.tensor_spans(), grad_spans);

        accumulated.total += stats.total;
        accumulated.policy_loss += stats.policy_loss;
        accumulated.value_loss += stats.value_loss;
        accumulated.entropy += stats.entropy;
        grad_norm_sum += norm;
        ++batches;
      }
    }

    ++update_count_;
    TrainLogRecord record;
    record.update = update_count_;
    record.steps = steps_done_;
    record.mean_reward = mean_reward;
    record.policy_loss = accumulated.policy_loss / batches;
    record.value_loss = accumulated.value_loss / batches;
    record.entropy = accumulated.entropy / batches;
    record.grad_norm = grad_norm_sum / batches;
    history_.push_back(record);
    if (log != nullptr) (*log) << record.to_json_line() << '\n' << std::flush;

    if (!checkpoint_dir.empty() && config_.checkpoint_interval > 0 &&
        update_count_ % config_.checkpoint_interval == 0) {
      std::ostringstream name;
      name << checkpoint_dir << "/update_" << update_count_ << ".ckpt";
      make_checkpoint().save(name.str());
    }
  }

  if (!checkpoint_dir.empty()) make_checkpoint().save(checkpoint_dir + "/final.ckpt");
}

Checkpoint fine_tune(const Checkpoint& checkpoint, std::vector<ScenarioConfig> scenarios,
                     RewardParams rewards, TrainConfig config, long long steps,
                     std::ostream* log, const std::string& checkpoint_dir) {
  Trainer trainer(std::move(scenarios), std::move(rewards), config);
  trainer.restore(checkpoint);
  trainer.train(steps, log, checkpoint_dir);
  return trainer.make_checkpoint();
}

}  // namespace hamppo
