#include <CLI11.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "hexamp/cli.hpp"
#include "hexamp/config.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string reward_mask;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool out_set = false;
  bool single_thread = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run config file");
  cmd->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--out", opts.out_dir, "output directory")->each([&](const std::string&) {
    opts.out_set = true;
  });
  cmd->add_option("--reward-mask", opts.reward_mask,
                  "comma list of enabled reward groups (task,style,penalty)");
  cmd->add_flag("--single-thread", opts.single_thread, "force single-threaded execution");
}

hexamp::RunConfig resolve_config(const CommonOpts& opts) {
  hexamp::RunConfig cfg;
  if (!opts.config_path.empty()) cfg = hexamp::load_config(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.out_set) cfg.out_dir = opts.out_dir;
  if (!opts.reward_mask.empty())
    hexamp::apply_config_line(cfg, "rewards", "mask", opts.reward_mask, "<cli>");
  if (opts.single_thread) cfg.single_thread = true;
  if (cfg.single_thread) Eigen::setNbThreads(1);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hexapod adversarial-motion-prior locomotion lab"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, ablate_opts;
  std::string resume_path, data_path;
  std::string checkpoint, scenario = "sine_track", axis = "y", validate_path;
  std::string seeds_text = "1,2,3";
  double duration = 16.0;

  CLI::App* gen = app.add_subcommand("gen-priors", "generate the tripod-gait prior dataset");
  add_common(gen, gen_opts);

  CLI::App* train = app.add_subcommand("train", "train a policy against the prior dataset");
  add_common(train, train_opts);
  train->add_option("--data", data_path, "dataset file (default <out>/priors.ampd)");
  train->add_option("--resume", resume_path, "checkpoint to resume from");

  CLI::App* eval = app.add_subcommand("eval", "roll out a trained policy and export a trajectory");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--scenario", scenario, "sine_track | constant[:vx,vy,wz] | terrain:<kind>:<level>");
  eval->add_option("--out", validate_path, "output directory")->required();
  eval->add_option("--duration", duration, "rollout length in seconds");

  std::string disturb_checkpoint;
  CLI::App* disturb = app.add_subcommand("disturb", "velocity-disturbance tolerance search");
  disturb->add_option("--checkpoint", disturb_checkpoint, "checkpoint file")->required();
  disturb->add_option("--axis", axis, "x | y | z");

  CLI::App* ablate = app.add_subcommand("ablate", "train the three reward-combination arms");
  add_common(ablate, ablate_opts);
  ablate->add_option("--seeds", seeds_text, "comma list of seeds");

  std::string dataset_file;
  CLI::App* validate = app.add_subcommand("validate-dataset", "check tripod invariants of a dataset");
  validate->add_option("--data", dataset_file, "dataset file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return hexamp::cmd_gen_priors(resolve_config(gen_opts));
    if (train->parsed()) {
      hexamp::RunConfig cfg = resolve_config(train_opts);
      if (!data_path.empty()) cfg.dataset_path = data_path;
      return hexamp::cmd_train(cfg, resume_path);
    }
    if (eval->parsed()) return hexamp::cmd_eval(checkpoint, scenario, validate_path, duration);
    if (disturb->parsed()) return hexamp::cmd_disturb(disturb_checkpoint, axis);
    if (ablate->parsed()) {
      std::vector<std::uint64_t> seeds;
      for (const auto& s : hexamp::detail::split_list(seeds_text)) seeds.push_back(std::stoull(s));
      if (seeds.empty()) throw std::invalid_argument("--seeds list is empty");
      return hexamp::cmd_ablate(resolve_config(ablate_opts), seeds);
    }
    if (validate->parsed()) return hexamp::cmd_validate_dataset(dataset_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
