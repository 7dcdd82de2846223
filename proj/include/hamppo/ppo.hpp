#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hamppo/field_env.hpp"
#include "hamppo/policy.hpp"

namespace hamppo {

struct TrainConfig {
  double learning_rate = 3e-4;
  int rollout_length = 2048;
  int minibatch = 64;
  int epochs = 10;
  double gamma = 0.99;
  double lambda = 0.95;
  double epsilon = 0.2;
  double entropy_coef = 0.02;
  double value_coef = 0.5;
  double grad_norm_clip = 0.5;
  long long total_steps = 1'000'000;
  std::uint64_t seed = 0;
  bool normalize_advantages = true;
  int checkpoint_interval = 50;  // updates between checkpoint files, 0 = only final
  double mask_constant = kDefaultMaskConstant;

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Exponentially weighted advantage over temporal-difference residuals,
// computed by the standard backward recursion. A done flag cuts the
// accumulation: the next value is treated as zero across episode boundaries.
GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<std::uint8_t>& dones, double bootstrap_value, double gamma,
              double lambda);

// min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv) and its derivative in the
// ratio (zero whenever the clipped branch is active outside the interval).
double ppo_clip_term(double ratio, double advantage, double epsilon);
double ppo_clip_term_dratio(double ratio, double advantage, double epsilon);

// Fixed-capacity on-policy storage for one update. Rollouts may span
// episodes; advantages are computed once the buffer is full.
class RolloutBuffer {
 public:
  RolloutBuffer(int capacity, int obs_dim);

  void add(const Eigen::VectorXd& obs, const HierAction& action, const ActionMask& mask,
           double log_prob, double value, double reward, bool done, double hint);
  bool full() const { return size_ == capacity_; }
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  void clear() { size_ = 0; }

  void compute_gae(double bootstrap_value, double gamma, double lambda);

  const Eigen::MatrixXd& observations() const { return obs_; }
  const std::vector<HierAction>& actions() const { return actions_; }
  const std::vector<ActionMask>& masks() const { return masks_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<std::uint8_t>& dones() const { return dones_; }
  const std::vector<double>& hints() const { return hints_; }
  const std::vector<double>& advantages() const { return advantages_; }
  const std::vector<double>& returns() const { return returns_; }

 private:
  int capacity_;
  int size_ = 0;
  Eigen::MatrixXd obs_;  // capacity x obs_dim
  std::vector<HierAction> actions_;
  std::vector<ActionMask> masks_;
  std::vector<double> log_probs_, values_, rewards_, hints_;
  std::vector<std::uint8_t> dones_;
  std::vector<double> advantages_, returns_;
};

struct LossStats {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

// Combined PPO objective over one minibatch (indices into the buffer),
// minimized form: -clip term + value_coef * value error - entropy_coef *
// entropy. When `grad` is non-null the analytic gradient is accumulated into
// it. Throws on a non-finite loss.
LossStats ppo_loss(const ActorCritic& net, const RolloutBuffer& buffer,
                   const std::vector<int>& batch, const TrainConfig& config, ActorCritic* grad);

struct TrainLogRecord {
  long update = 0;
  long long steps = 0;
  double mean_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;

  std::string to_json_line() const;
};

// Versioned training snapshot: network, optimizer moments, RNG streams and
// progress counters.
struct Checkpoint {
  ActorCritic net;
  FieldGeometry geometry;
  std::vector<double> adam_m, adam_v;
  long adam_steps = 0;
  std::array<std::uint64_t, 4> sample_rng_state{};
  long long steps_done = 0;
  long long episodes_done = 0;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// On-policy training over a scenario set: collect a fixed-length masked
// rollout (sampling a scenario per episode), estimate advantages, then run
// clipped-objective epochs with Adam and global gradient-norm clipping.
class Trainer {
 public:
  Trainer(std::vector<ScenarioConfig> scenarios, RewardParams rewards, TrainConfig config);

  // Continue from a checkpoint; the architecture must match the scenarios'
  // observation layout.
  void restore(const Checkpoint& checkpoint);

  // Runs `steps` environment steps (rounded up to whole rollouts). Log
  // records go to `log` as JSON lines when provided; checkpoints are written
  // under `checkpoint_dir` when non-empty.
  void train(long long steps, std::ostream* log, const std::string& checkpoint_dir);

  Checkpoint make_checkpoint() const;
  const ActorCritic& net() const { return net_; }
  const std::vector<TrainLogRecord>& history() const { return history_; }
  long long steps_done() const { return steps_done_; }

 private:
  void ensure_env();
  double collect_rollout(RolloutBuffer& buffer);

  std::vector<ScenarioConfig> scenarios_;
  RewardParams rewards_;
  TrainConfig config_;
  ObsEncoder encoder_;
  ActorCritic net_;
  AdamOptimizer optimizer_;
  Rng sample_rng_;
  std::optional<FieldEnv> env_;
  Eigen::VectorXd current_obs_;
  bool env_done_ = true;
  double episode_reward_ = 0.0;
  std::vector<double> finished_episode_rewards_;
  long long steps_done_ = 0;
  long long episodes_done_ = 0;
  long update_count_ = 0;
  double last_mean_reward_ = 0.0;
  std::vector<TrainLogRecord> history_;
};

// Continues training from `checkpoint` on a scenario subset and returns the
// new checkpoint. Zero additional steps returns the input parameters
// unchanged.
Checkpoint fine_tune(const Checkpoint& checkpoint, std::vector<ScenarioConfig> scenarios,
                     RewardParams rewards, TrainConfig config, long long steps,
                     std::ostream* log = nullptr, const std::string& checkpoint_dir = "");

}  // namespace hamppo
