#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hamppo/eval.hpp"
#include "hamppo/field_env.hpp"
#include "hamppo/ppo.hpp"
#include "hamppo/scenario.hpp"

namespace hamppo {

// Configuration problems carry their own type so the CLI can map them to a
// dedicated exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolved run configuration: a base scenario, reward constants, training
// hyperparameters, evaluation settings and an optional sweep grid expanding
// the base scenario.
struct AppConfig {
  ScenarioConfig scenario;
  RewardParams rewards;
  TrainConfig ppo;
  EvalSettings eval;
  double reactive_flip = 0.15;
  bool eval_stochastic = false;

  // Sweep axes; empty lists keep the base scenario's setting.
  std::vector<std::pair<double, double>> sweep_ranges;
  std::vector<Randomness> sweep_randomness;
  std::vector<Initiation> sweep_initiations;

  // Cross product of the sweep axes applied to the base scenario; the base
  // scenario alone when no axis is set.
  std::vector<ScenarioConfig> scenario_grid() const;

  void validate() const;
};

// Parses `key = value` lines ('#' starts a comment). Unknown keys, malformed
// values and out-of-range settings are each rejected naming the offending
// token. An empty file yields the built-in defaults.
AppConfig load_config_text(const std::string& text, const std::vector<std::string>& overrides);
AppConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides);

// Canonical dump of every key at its resolved value; parsing it back gives
// the same configuration.
std::string resolved_config_text(const AppConfig& config);

}  // namespace hamppo
