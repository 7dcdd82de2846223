#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "hamppo/config.hpp"
#include "hamppo/eval.hpp"
#include "hamppo/ppo.hpp"
#include "hamppo/scenario.hpp"

namespace fs = std::filesystem;
using namespace hamppo;

namespace {

constexpr const char* kVersion = "hamppo 0.1.0";

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

std::string resolve_config_path(const std::string& path) {
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("HAMPPO_CONFIG_DIR"); dir != nullptr && fs::path(path).is_relative()) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  throw ConfigError("config file not found: " + path);
}

AppConfig load(const CommonArgs& args) {
  return load_config_file(resolve_config_path(args.config_path), args.overrides);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

void write_snapshot(const AppConfig& config, const fs::path& beside) {
  fs::path path = beside;
  if (fs::is_directory(beside) || beside.extension().empty()) {
    fs::create_directories(beside);
    path = beside / "resolved.cfg";
  } else {
    path = beside.string() + ".resolved.cfg";
  }
  write_file(path.string(), resolved_config_text(config));
}

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true) {
  cmd->add_option("--config", args.config_path, "run configuration file")->required();
  cmd->add_option("--set", args.overrides,
                  "override a config key, e.g. --set ppo.epsilon=0.1 (repeatable)");
  auto* out = cmd->add_option("--out", args.out, "output file or directory");
  if (out_required) out->required();
}

struct LoadedCheckpoint {
  std::optional<Checkpoint> checkpoint;

  const ActorCritic* net() const { return checkpoint ? &checkpoint->net : nullptr; }
};

LoadedCheckpoint load_checkpoint_if(const std::string& path, const AppConfig& config) {
  LoadedCheckpoint loaded;
  if (path.empty()) return loaded;
  if (!fs::exists(path)) throw ConfigError("checkpoint file not found: " + path);
  loaded.checkpoint = Checkpoint::load(path);
  if (!(loaded.checkpoint->geometry == config.scenario.geometry))
    throw ConfigError("checkpoint geometry does not match the configured field");
  return loaded;
}

std::vector<const EpisodePolicy*> as_pointers(
    const std::vector<std::unique_ptr<EpisodePolicy>>& policies) {
  std::vector<const EpisodePolicy*> out;
  out.reserve(policies.size());
  for (const auto& p : policies) out.push_back(p.get());
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Grid-field spray-planning simulator, trainer and evaluation harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // gen-scenario
  CommonArgs gen_args;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-scenario", "generate an infection map as a text grid");
  add_common(gen, gen_args);
  gen->add_option("--seed", gen_seed, "map generation seed");

  // train
  CommonArgs train_args;
  long long train_steps = -1;
  auto* train_cmd = app.add_subcommand("train", "train a policy on the configured scenarios");
  add_common(train_cmd, train_args);
  train_cmd->add_option("--steps", train_steps, "environment steps (default ppo.total_steps)");

  // fine-tune
  CommonArgs ft_args;
  long long ft_steps = -1;
  std::string ft_checkpoint;
  auto* ft = app.add_subcommand("fine-tune", "continue training a checkpoint on a scenario subset");
  add_common(ft, ft_args);
  ft->add_option("--checkpoint", ft_checkpoint, "checkpoint to start from")->required();
  ft->add_option("--steps", ft_steps, "environment steps (default ppo.total_steps)");

  // eval
  CommonArgs eval_args;
  std::string eval_policy = "ham-ppo";
  std::string eval_checkpoint;
  int eval_seeds = -1;
  int eval_workers = 1;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate one policy over the scenario grid");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--policy", eval_policy, "policy name")->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint for network policies");
  eval_cmd->add_option("--seeds", eval_seeds, "number of evaluation seeds");
  eval_cmd->add_option("--workers", eval_workers, "parallel evaluation cells");

  // sweep
  CommonArgs sweep_args;
  std::vector<std::string> sweep_policies;
  std::string sweep_checkpoint;
  int sweep_seeds = -1;
  int sweep_workers = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate policies over the scenario grid");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--policies", sweep_policies, "comma separated policy names")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--checkpoint", sweep_checkpoint, "checkpoint for network policies");
  sweep_cmd->add_option("--seeds", sweep_seeds, "number of evaluation seeds");
  sweep_cmd->add_option("--workers", sweep_workers, "parallel evaluation cells");

  // noise-sweep
  CommonArgs noise_args;
  std::string noise_policy = "ham-ppo";
  std::string noise_checkpoint;
  std::vector<double> noise_sigmas{0.05, 0.2, 0.5, 0.7};
  std::vector<double> noise_flips{0.05, 0.2, 0.5, 0.7};
  int noise_seeds = -1;
  int noise_workers = 1;
  auto* noise_cmd =
      app.add_subcommand("noise-sweep", "evaluate one policy across observation noise levels");
  add_common(noise_cmd, noise_args);
  noise_cmd->add_option("--policy", noise_policy, "policy name")->required();
  noise_cmd->add_option("--checkpoint", noise_checkpoint, "checkpoint for network policies");
  noise_cmd->add_option("--sigmas", noise_sigmas, "gaussian sigma grid")->delimiter(',');
  noise_cmd->add_option("--flips", noise_flips, "flip probability grid")->delimiter(',');
  noise_cmd->add_option("--seeds", noise_seeds, "number of evaluation seeds");
  noise_cmd->add_option("--workers", noise_workers, "parallel evaluation cells");

  // export-traj
  CommonArgs traj_args;
  std::string traj_policy = "ham-ppo";
  std::string traj_checkpoint;
  std::uint64_t traj_seed = 1;
  auto* traj_cmd =
      app.add_subcommand("export-traj", "run one episode and export it as JSON lines");
  add_common(traj_cmd, traj_args);
  traj_cmd->add_option("--policy", traj_policy, "policy name")->required();
  traj_cmd->add_option("--checkpoint", traj_checkpoint, "checkpoint for network policies");
  traj_cmd->add_option("--seed", traj_seed, "episode seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const AppConfig config = load(gen_args);
      const InfectionMap map = generate_infection_map(config.scenario, gen_seed);
      write_file(gen_args.out, map_to_text(map, config.scenario.geometry));
      write_snapshot(config, gen_args.out);
      std::cout << "wrote " << gen_args.out << " (" << map.infected_count << " infected cells)\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      const AppConfig config = load(train_args);
      const long long steps = train_steps >= 0 ? train_steps : config.ppo.total_steps;
      fs::create_directories(train_args.out);
      write_snapshot(config, train_args.out);
      std::ofstream log(fs::path(train_args.out) / "training_log.jsonl");
      Trainer trainer(config.scenario_grid(), config.rewards, config.ppo);
      trainer.train(steps, &log, train_args.out);
      std::cout << "trained " << trainer.steps_done() << " steps; checkpoints under "
                << train_args.out << "\n";
      return 0;
    }

    if (ft->parsed()) {
      const AppConfig config = load(ft_args);
      const long long steps = ft_steps >= 0 ? ft_steps : config.ppo.total_steps;
      const LoadedCheckpoint loaded = load_checkpoint_if(ft_checkpoint, config);
      fs::create_directories(ft_args.out);
      write_snapshot(config, ft_args.out);
      std::ofstream log(fs::path(ft_args.out) / "training_log.jsonl");
      fine_tune(*loaded.checkpoint, config.scenario_grid(), config.rewards, config.ppo, steps,
                &log, ft_args.out);
      std::cout << "fine-tuned for " << steps << " steps; checkpoints under " << ft_args.out
                << "\n";
      return 0;
    }

    auto run_report_command = [&](const CommonArgs& args, const std::vector<std::string>& names,
                                  const std::string& checkpoint_path, int seeds, int workers) {
      AppConfig config = load(args);
      if (seeds > 0) config.eval.seeds = seeds;
      const LoadedCheckpoint loaded = load_checkpoint_if(checkpoint_path, config);
      PolicyAssets assets;
      assets.net = loaded.net();
      assets.geometry = config.scenario.geometry;
      assets.reactive_flip = config.reactive_flip;
      assets.stochastic = config.eval_stochastic;
      assets.mask_constant = config.ppo.mask_constant;
      std::vector<std::unique_ptr<EpisodePolicy>> policies;
      for (const std::string& name : names) policies.push_back(make_policy(name, assets));

      fs::create_directories(args.out);
      write_snapshot(config, args.out);
      const MetricsReport report =
          sweep(as_pointers(policies), config.scenario_grid(), config.rewards, config.eval,
                workers);
      write_file((fs::path(args.out) / "results.csv").string(), report.to_csv());
      write_file((fs::path(args.out) / "aggregates.json").string(), report.aggregates_to_json());
      std::cout << "wrote " << (fs::path(args.out) / "results.csv").string() << " ("
                << report.rows.size() << " rows)\n";
    };

    if (eval_cmd->parsed()) {
      run_report_command(eval_args, {eval_policy}, eval_checkpoint, eval_seeds, eval_workers);
      return 0;
    }

    if (sweep_cmd->parsed()) {
      run_report_command(sweep_args, sweep_policies, sweep_checkpoint, sweep_seeds, sweep_workers);
      return 0;
    }

    if (noise_cmd->parsed()) {
      AppConfig config = load(noise_args);
      if (noise_seeds > 0) config.eval.seeds = noise_seeds;
      const LoadedCheckpoint loaded = load_checkpoint_if(noise_checkpoint, config);
      PolicyAssets assets;
      assets.net = loaded.net();
      assets.geometry = config.scenario.geometry;
      assets.reactive_flip = config.reactive_flip;
      assets.stochastic = config.eval_stochastic;
      assets.mask_constant = config.ppo.mask_constant;
      const auto policy = make_policy(noise_policy, assets);

      fs::create_directories(noise_args.out);
      write_snapshot(config, noise_args.out);
      const NoiseSweepResult result = noise_sweep(*policy, config.scenario, config.rewards,
                                                  noise_sigmas, noise_flips, config.eval,
                                                  noise_workers);
      write_file((fs::path(noise_args.out) / "noise_results.csv").string(),
                 result.report.to_csv());
      write_file((fs::path(noise_args.out) / "plot_yield.csv").string(),
                 result.plot_csv("yield_pct"));
      write_file((fs::path(noise_args.out) / "plot_cost.csv").string(),
                 result.plot_csv("pesticide_cost"));
      std::cout << "wrote noise sweep outputs under " << noise_args.out << "\n";
      return 0;
    }

    if (traj_cmd->parsed()) {
      const AppConfig config = load(traj_args);
      const LoadedCheckpoint loaded = load_checkpoint_if(traj_checkpoint, config);
      PolicyAssets assets;
      assets.net = loaded.net();
      assets.geometry = config.scenario.geometry;
      assets.reactive_flip = config.reactive_flip;
      assets.stochastic = config.eval_stochastic;
      assets.mask_constant = config.ppo.mask_constant;
      const auto policy = make_policy(traj_policy, assets);
      const EpisodeTrajectory traj =
          run_episode(*policy, config.scenario, config.rewards, traj_seed);
      write_trajectory_jsonl(traj, traj_args.out);
      write_snapshot(config, traj_args.out);
      std::cout << "wrote " << traj_args.out << " (" << traj.steps.size() << " steps)\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
