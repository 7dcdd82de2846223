#include "hamppo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hamppo {
namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::istringstream in(s);
  for (std::string item; std::getline(in, item, sep);) parts.push_back(trim(item));
  return parts;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

double parse_range(const std::string& key, const std::string& value, double lo, double hi) {
  const double v = parse_double(key, value);
  if (v < lo || v > hi) {
    std::ostringstream msg;
    msg << "key '" << key << "': value " << value << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
  return v;
}

Randomness parse_randomness(const std::string& key, const std::string& value) {
  if (value == "low") return Randomness::Low;
  if (value == "high") return Randomness::High;
  throw ConfigError("key '" + key + "': expected low|high, got '" + value + "'");
}

Initiation parse_initiation(const std::string& key, const std::string& value) {
  if (value == "center") return Initiation::Center;
  if (value == "corners") return Initiation::Corners;
  throw ConfigError("key '" + key + "': expected center|corners, got '" + value + "'");
}

void apply_key(AppConfig& config, const std::string& key, const std::string& value) {
  ScenarioConfig& sc = config.scenario;
  RewardParams& rw = config.rewards;
  TrainConfig& ppo = config.ppo;

  if (key == "field.rows") sc.geometry.interior_rows = static_cast<int>(parse_int(key, value));
  else if (key == "field.cols") sc.geometry.cols = static_cast<int>(parse_int(key, value));
  else if (key == "field.headland") sc.geometry.headland = static_cast<int>(parse_int(key, value));
  else if (key == "scenario.infection_lo") sc.infection_lo = parse_range(key, value, 0.0, 1.0);
  else if (key == "scenario.infection_hi") sc.infection_hi = parse_range(key, value, 0.0, 1.0);
  else if (key == "scenario.randomness") sc.randomness = parse_randomness(key, value);
  else if (key == "scenario.scatter_q") {
    sc.scatter_q = value == "auto" ? -1.0 : parse_range(key, value, 0.0, 1.0);
  } else if (key == "scenario.initiation") {
    sc.initiation = parse_initiation(key, value);
  } else if (key == "scenario.distribution") {
    if (value == "categorical") {
      sc.distribution = LevelDistribution{true, Health::I2};
    } else if (value == "fixed:1" || value == "fixed:2" || value == "fixed:3") {
      sc.distribution = LevelDistribution{false, infection_from_level(value.back() - '0')};
    } else {
      throw ConfigError("key '" + key + "': expected categorical|fixed:1|fixed:2|fixed:3, got '" +
                        value + "'");
    }
  } else if (key == "scenario.noise") {
    if (value == "none") sc.noise.kind = NoiseModel::Kind::None;
    else if (value == "gaussian") sc.noise.kind = NoiseModel::Kind::Gaussian;
    else if (value == "flip") sc.noise.kind = NoiseModel::Kind::Flip;
    else throw ConfigError("key '" + key + "': expected none|gaussian|flip, got '" + value + "'");
  } else if (key == "scenario.noise_level") {
    sc.noise.param = parse_double(key, value);
  } else if (key == "scenario.budget") {
    sc.budget = value == "auto" ? kAutoBudget : static_cast<int>(parse_int(key, value));
  } else if (key == "scenario.movement_buffer") {
    sc.movement_buffer = static_cast<int>(parse_int(key, value));
  } else if (key == "scenario.spray_charges") {
    sc.spray_charges = value == "unlimited" ? kUnlimitedCharges : parse_int(key, value);
  } else if (key == "scenario.map_seed") {
    sc.map_seed = value == "auto" ? kPerEpisodeMap : parse_int(key, value);
  } else if (key == "reward.uay") rw.uay = parse_double(key, value);
  else if (key == "reward.ppb") rw.ppb = parse_double(key, value);
  else if (key == "reward.upp") rw.upp = parse_double(key, value);
  else if (key == "reward.kappa_rev") rw.kappa_rev = parse_double(key, value);
  else if (key == "reward.t50") rw.t50 = parse_double(key, value);
  else if (key == "reward.t_inf_1") rw.levels[0].t_inf = parse_double(key, value);
  else if (key == "reward.t_inf_2") rw.levels[1].t_inf = parse_double(key, value);
  else if (key == "reward.t_inf_3") rw.levels[2].t_inf = parse_double(key, value);
  else if (key == "reward.p_inf_1") rw.levels[0].p_inf = parse_range(key, value, 0.0, 1.0);
  else if (key == "reward.p_inf_2") rw.levels[1].p_inf = parse_range(key, value, 0.0, 1.0);
  else if (key == "reward.p_inf_3") rw.levels[2].p_inf = parse_range(key, value, 0.0, 1.0);
  else if (key == "ppo.learning_rate") ppo.learning_rate = parse_double(key, value);
  else if (key == "ppo.rollout_length") ppo.rollout_length = static_cast<int>(parse_int(key, value));
  else if (key == "ppo.minibatch") ppo.minibatch = static_cast<int>(parse_int(key, value));
  else if (key == "ppo.epochs") ppo.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "ppo.gamma") ppo.gamma = parse_range(key, value, 0.0, 1.0);
  else if (key == "ppo.lambda") ppo.lambda = parse_range(key, value, 0.0, 1.0);
  else if (key == "ppo.epsilon") ppo.epsilon = parse_double(key, value);
  else if (key == "ppo.entropy_coef") ppo.entropy_coef = parse_double(key, value);
  else if (key == "ppo.value_coef") ppo.value_coef = parse_double(key, value);
  else if (key == "ppo.grad_norm_clip") ppo.grad_norm_clip = parse_double(key, value);
  else if (key == "ppo.total_steps") ppo.total_steps = parse_int(key, value);
  else if (key == "ppo.seed") ppo.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "ppo.normalize_advantages") ppo.normalize_advantages = parse_bool(key, value);
  else if (key == "ppo.checkpoint_interval")
    ppo.checkpoint_interval = static_cast<int>(parse_int(key, value));
  else if (key == "ppo.mask_constant") ppo.mask_constant = parse_double(key, value);
  else if (key == "eval.seeds") config.eval.seeds = static_cast<int>(parse_int(key, value));
  else if (key == "eval.base_seed")
    config.eval.base_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "eval.area_acres")
    config.eval.area_acres = value == "auto" ? -1.0 : parse_double(key, value);
  else if (key == "eval.per_field") config.eval.per_field = parse_bool(key, value);
  else if (key == "eval.reactive_flip") config.reactive_flip = parse_range(key, value, 0.0, 1.0);
  else if (key == "eval.stochastic") config.eval_stochastic = parse_bool(key, value);
  else if (key == "sweep.infection_ranges") {
    config.sweep_ranges.clear();
    for (const std::string& token : split(value, ',')) {
      const auto dash = token.find('-');
      if (dash == std::string::npos)
        throw ConfigError("key '" + key + "': expected lo-hi pairs, got '" + token + "'");
      config.sweep_ranges.emplace_back(parse_range(key, token.substr(0, dash), 0.0, 1.0),
                                       parse_range(key, token.substr(dash + 1), 0.0, 1.0));
    }
  } else if (key == "sweep.randomness") {
    config.sweep_randomness.clear();
    for (const std::string& token : split(value, ','))
      config.sweep_randomness.push_back(parse_randomness(key, token));
  } else if (key == "sweep.initiations") {
    config.sweep_initiations.clear();
    for (const std::string& token : split(value, ','))
      config.sweep_initiations.push_back(parse_initiation(key, token));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_line(AppConfig& config, const std::string& raw, const std::string& where) {
  std::string line = raw;
  const auto hash = line.find('#');
  if (hash != std::string::npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw ConfigError(where + ": expected 'key = value', got '" + trim(raw) + "'");
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": missing key in '" + trim(raw) + "'");
  if (value.empty()) throw ConfigError("key '" + key + "': missing value");
  apply_key(config, key, value);
}

std::string randomness_name(Randomness r) { return r == Randomness::Low ? "low" : "high"; }
std::string initiation_name(Initiation i) {
  return i == Initiation::Center ? "center" : "corners";
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::vector<ScenarioConfig> AppConfig::scenario_grid() const {
  std::vector<std::pair<double, double>> ranges = sweep_ranges;
  if (ranges.empty()) ranges.push_back({scenario.infection_lo, scenario.infection_hi});
  std::vector<Randomness> randomness = sweep_randomness;
  if (randomness.empty()) randomness.push_back(scenario.randomness);
  std::vector<Initiation> initiations = sweep_initiations;
  if (initiations.empty()) initiations.push_back(scenario.initiation);

  std::vector<ScenarioConfig> grid;
  for (const auto& range : ranges) {
    for (const Randomness r : randomness) {
      for (const Initiation i : initiations) {
        ScenarioConfig s = scenario;
        s.infection_lo = range.first;
        s.infection_hi = range.second;
        s.randomness = r;
        s.initiation = i;
        grid.push_back(std::move(s));
      }
    }
  }
  return grid;
}

void AppConfig::validate() const {
  try {
    for (const auto& s : scenario_grid()) s.validate();
    rewards.validate();
    ppo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (eval.seeds <= 0) throw ConfigError("eval.seeds must be positive");
}

AppConfig load_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  AppConfig config;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    apply_line(config, line, "line " + std::to_string(line_no));
  }
  for (const std::string& override_expr : overrides) {
    apply_line(config, override_expr, "override '" + override_expr + "'");
  }
  config.validate();
  return config;
}

AppConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config_text(buffer.str(), overrides);
}

std::string resolved_config_text(const AppConfig& config) {
  const ScenarioConfig& sc = config.scenario;
  const RewardParams& rw = config.rewards;
  const TrainConfig& ppo = config.ppo;
  std::ostringstream out;
  out << "field.rows = " << sc.geometry.interior_rows << '\n';
  out << "field.cols = " << sc.geometry.cols << '\n';
  out << "field.headland = " << sc.geometry.headland << '\n';
  out << "scenario.infection_lo = " << fmt(sc.infection_lo) << '\n';
  out << "scenario.infection_hi = " << fmt(sc.infection_hi) << '\n';
  out << "scenario.randomness = " << randomness_name(sc.randomness) << '\n';
  out << "scenario.scatter_q = "
      << (sc.scatter_q < 0.0 ? std::string("auto") : fmt(sc.scatter_q)) << '\n';
  out << "scenario.initiation = " << initiation_name(sc.initiation) << '\n';
  out << "scenario.distribution = "
      << (sc.distribution.categorical
              ? std::string("categorical")
              : "fixed:" + std::to_string(infection_level(sc.distribution.fixed_level)))
      << '\n';
  out << "scenario.noise = "
      << (sc.noise.kind == NoiseModel::Kind::None
              ? "none"
              : sc.noise.kind == NoiseModel::Kind::Gaussian ? "gaussian" : "flip")
      << '\n';
  out << "scenario.noise_level = " << fmt(sc.noise.param) << '\n';
  out << "scenario.budget = "
      << (sc.budget == kAutoBudget ? std::string("auto") : std::to_string(sc.budget)) << '\n';
  out << "scenario.movement_buffer = " << sc.movement_buffer << '\n';
  out << "scenario.spray_charges = "
      << (sc.spray_charges == kUnlimitedCharges ? std::string("unlimited")
                                                : std::to_string(sc.spray_charges))
      << '\n';
  out << "scenario.map_seed = "
      << (sc.map_seed == kPerEpisodeMap ? std::string("auto") : std::to_string(sc.map_seed))
      << '\n';
  out << "reward.uay = " << fmt(rw.uay) << '\n';
  out << "reward.ppb = " << fmt(rw.ppb) << '\n';
  out << "reward.upp = " << fmt(rw.upp) << '\n';
  out << "reward.kappa_rev = " << fmt(rw.kappa_rev) << '\n';
  out << "reward.t50 = " << fmt(rw.t50) << '\n';
  for (int level = 1; level <= 3; ++level) {
    out << "reward.t_inf_" << level << " = " << fmt(rw.levels[level - 1].t_inf) << '\n';
    out << "reward.p_inf_" << level << " = " << fmt(rw.levels[level - 1].p_inf) << '\n';
  }
  out << "ppo.learning_rate = " << fmt(ppo.learning_rate) << '\n';
  out << "ppo.rollout_length = " << ppo.rollout_length << '\n';
  out << "ppo.minibatch = " << ppo.minibatch << '\n';
  out << "ppo.epochs = " << ppo.epochs << '\n';
  out << "ppo.gamma = " << fmt(ppo.gamma) << '\n';
  out << "ppo.lambda = " << fmt(ppo.lambda) << '\n';
  out << "ppo.epsilon = " << fmt(ppo.epsilon) << '\n';
  out << "ppo.entropy_coef = " << fmt(ppo.entropy_coef) << '\n';
  out << "ppo.value_coef = " << fmt(ppo.value_coef) << '\n';
  out << "ppo.grad_norm_clip = " << fmt(ppo.grad_norm_clip) << '\n';
  out << "ppo.total_steps = " << ppo.total_steps << '\n';
  out << "ppo.seed = " << ppo.seed << '\n';
  out << "ppo.normalize_advantages = " << (ppo.normalize_advantages ? "true" : "false") << '\n';
  out << "ppo.checkpoint_interval = " << ppo.checkpoint_interval << '\n';
  out << "ppo.mask_constant = " << fmt(ppo.mask_constant) << '\n';
  out << "eval.seeds = " << config.eval.seeds << '\n';
  out << "eval.base_seed = " << config.eval.base_seed << '\n';
  out << "eval.area_acres = "
      << (config.eval.area_acres < 0.0 ? std::string("auto") : fmt(config.eval.area_acres))
      << '\n';
  out << "eval.per_field = " << (config.eval.per_field ? "true" : "false") << '\n';
  out << "eval.reactive_flip = " << fmt(config.reactive_flip) << '\n';
  out << "eval.stochastic = " << (config.eval_stochastic ? "true" : "false") << '\n';
  if (!config.sweep_ranges.empty()) {
    out << "sweep.infection_ranges = ";
    for (std::size_t i = 0; i < config.sweep_ranges.size(); ++i) {
      if (i) out << ',';
      out << fmt(config.sweep_ranges[i].first) << '-' << fmt(config.sweep_ranges[i].second);
    }
    out << '\n';
  }
  if (!config.sweep_randomness.empty()) {
    out << "sweep.randomness = ";
    for (std::size_t i = 0; i < config.sweep_randomness.size(); ++i) {
      if (i) out << ',';
      out << randomness_name(config.sweep_randomness[i]);
    }
    out << '\n';
  }
  if (!config.sweep_initiations.empty()) {
    out << "sweep.initiations = ";
    for (std::size_t i = 0; i < config.sweep_initiations.size(); ++i) {
      if (i) out << ',';
      out << initiation_name(config.sweep_initiations[i]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hamppo
