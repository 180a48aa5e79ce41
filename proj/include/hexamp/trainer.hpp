#pragma once

#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "hexamp/amp.hpp"
#include "hexamp/checkpoint.hpp"
#include "hexamp/env.hpp"
#include "hexamp/priors.hpp"
#include "hexamp/rl.hpp"

namespace hexamp {

/// Owns the whole training state: environments, the three-network actor,
/// the encoder critic, and the discriminator, all seeded from one integer.
class Trainer {
 public:
  Trainer(const RobotModel& model, TrainConfig cfg, EnvConfig env_cfg,
          const PriorDataset& dataset, std::uint64_t seed)
      : model_(model),
        cfg_(cfg),
        env_cfg_(env_cfg),
        dataset_(&dataset),
        pool_(env_cfg.terrain_kinds, env_cfg.terrain_friction, split_seed(seed, 0x7e44)),
        rng_(split_seed(seed, 0x11)),
        buf_(cfg.horizon, cfg.env_count) {
    cfg_.validate();
    Rng net_rng(split_seed(seed, 0x22));
    policy_ = PolicyStack(net_rng, cfg_.lr);
    critic_ = CriticStack(net_rng, cfg_.lr);
    Rng disc_rng(split_seed(seed, 0x33));
    disc_ = Discriminator(disc_rng, cfg_.disc_lr, cfg_.alpha_gp);
    disc_.set_normalizer(dataset);
    envs_.reserve(cfg_.env_count);
    for (int e = 0; e < cfg_.env_count; ++e)
      envs_.emplace_back(model_, env_cfg_, pool_, Rng(split_seed(seed, 0x1000 + e)));
  }

  /// Primes the discriminator on initial-policy transitions so the style
  /// signal starts from a separating decision surface.
  void warmup_discriminator() {
    if (cfg_.disc_warmup_updates <= 0) return;
    collect_rollout(policy_, critic_, disc_, envs_, buf_);
    update_discriminator(disc_, *dataset_, buf_.amp_pairs, cfg_.disc_warmup_updates,
                         cfg_.disc_batch, rng_);
    for (auto& env : envs_) env.reset();
  }

  IterationRow run_iteration() {
    collect_rollout(policy_, critic_, disc_, envs_, buf_);
    const DiscriminatorMetrics dm =
        update_discriminator(disc_, *dataset_, buf_.amp_pairs, cfg_.disc_updates,
                             cfg_.disc_batch, rng_);
    const GaeResult gae = compute_gae(buf_.reward, buf_.value, buf_.done, buf_.bootstrap_value,
                                      cfg_.env_count, cfg_.gamma, cfg_.lam);
    const UpdateMetrics um = ppo_update(policy_, critic_, buf_, gae, cfg_, rng_);
    update_curriculum(envs_, buf_.episodes, env_cfg_.reward.lin_scale);

    IterationRow row;
    row.iteration = iteration_;
    row.mean_total_reward = buf_.mean_total;
    row.mean_task = buf_.mean_task;
    row.mean_style = buf_.mean_style;
    row.mean_penalty = buf_.mean_penalty;
    row.disc_loss = mean_of(dm.loss);
    row.disc_real_mean = mean_of(dm.real_mean);
    row.disc_fake_mean = mean_of(dm.fake_mean);
    row.est_mse = um.est_mse;
    if (!buf_.episodes.empty()) {
      double len = 0;
      for (const auto& ep : buf_.episodes) len += ep.length;
      row.mean_episode_len = len / buf_.episodes.size();
    } else {
      row.mean_episode_len = buf_.mean_inprogress_len;
    }
    double lvl = 0;
    for (const auto& env : envs_) lvl += env.level();
    row.mean_terrain_level = lvl / envs_.size();
    row.lr = um.lr;
    row.kl = um.kl;
    iteration_ += 1;
    return row;
  }

  /// Full training loop. `on_row` fires once per iteration; checkpoints are
  /// written every cfg.checkpoint_interval iterations and at the end when
  /// `checkpoint_path` is non-empty.
  std::vector<IterationRow> run(const std::string& checkpoint_path = "",
                                const std::function<void(const IterationRow&)>& on_row = {}) {
    if (iteration_ == 0) warmup_discriminator();
    std::vector<IterationRow> rows;
    while (iteration_ < cfg_.max_iterations) {
      rows.push_back(run_iteration());
      if (on_row) on_row(rows.back());
      if (!checkpoint_path.empty() &&
          (iteration_ % cfg_.checkpoint_interval == 0 || iteration_ == cfg_.max_iterations))
        save_checkpoint(checkpoint_path);
    }
    return rows;
  }

  void save_checkpoint(const std::string& path) const {
    TensorStore store;
    pack_mlp(store, "policy.estimator", policy_.estimator);
    pack_mlp(store, "policy.memory", policy_.memory);
    pack_mlp(store, "policy.low", policy_.low);
    store.put_vector("policy.log_std", policy_.head.log_std);
    pack_mlp(store, "critic.priv_enc", critic_.priv_enc);
    pack_mlp(store, "critic.terr_enc", critic_.terr_enc);
    pack_mlp(store, "critic.value", critic_.value);
    pack_mlp(store, "disc.net", disc_.net);
    pack_adam(store, "adam.policy.estimator", policy_.est_adam);
    pack_adam(store, "adam.policy.memory", policy_.mem_adam);
    pack_adam(store, "adam.policy.low", policy_.low_adam);
    store.put_vector("adam.policy.log_std.m", policy_.logstd_adam.m);
    store.put_vector("adam.policy.log_std.v", policy_.logstd_adam.v);
    store.put_scalar("adam.policy.log_std.step", static_cast<double>(policy_.logstd_adam.step));
    pack_adam(store, "adam.critic.priv_enc", critic_.p_adam);
    pack_adam(store, "adam.critic.terr_enc", critic_.t_adam);
    pack_adam(store, "adam.critic.value", critic_.v_adam);
    pack_adam(store, "adam.disc", disc_.adam);
    store.put_vector("norm.mean", disc_.norm_mean);
    store.put_vector("norm.std", disc_.norm_std);
    store.put_scalar("train.iteration", static_cast<double>(iteration_));
    store.put_scalar("train.lr", cfg_.lr);
    store.put_scalar("disc.alpha_gp", disc_.alpha_gp);
    Eigen::VectorXd levels(envs_.size());
    for (std::size_t e = 0; e < envs_.size(); ++e) levels[e] = envs_[e].level();
    store.put_vector("train.terrain_levels", levels);
    save_tensor_store(store, path);
  }

  void load_checkpoint(const std::string& path) {
    const TensorStore store = load_tensor_store(path);
    policy_.estimator = unpack_mlp(store, "policy.estimator");
    policy_.memory = unpack_mlp(store, "policy.memory");
    policy_.low = unpack_mlp(store, "policy.low");
    policy_.head.log_std = store.get_vector("policy.log_std");
    critic_.priv_enc = unpack_mlp(store, "critic.priv_enc");
    critic_.terr_enc = unpack_mlp(store, "critic.terr_enc");
    critic_.value = unpack_mlp(store, "critic.value");
    disc_.net = unpack_mlp(store, "disc.net");
    unpack_adam(store, "adam.policy.estimator", policy_.est_adam);
    unpack_adam(store, "adam.policy.memory", policy_.mem_adam);
    unpack_adam(store, "adam.policy.low", policy_.low_adam);
    policy_.logstd_adam.m = store.get_vector("adam.policy.log_std.m");
    policy_.logstd_adam.v = store.get_vector("adam.policy.log_std.v");
    policy_.logstd_adam.step = static_cast<long>(store.get_scalar("adam.policy.log_std.step"));
    unpack_adam(store, "adam.critic.priv_enc", critic_.p_adam);
    unpack_adam(store, "adam.critic.terr_enc", critic_.t_adam);
    unpack_adam(store, "adam.critic.value", critic_.v_adam);
    unpack_adam(store, "adam.disc", disc_.adam);
    disc_.norm_mean = store.get_vector("norm.mean");
    disc_.norm_std = store.get_vector("norm.std");
    disc_.alpha_gp = store.get_scalar("disc.alpha_gp");
    iteration_ = static_cast<int>(store.get_scalar("train.iteration"));
    cfg_.lr = store.get_scalar("train.lr");
    policy_.logstd_adam.lr = cfg_.lr;
    const Eigen::VectorXd levels = store.get_vector("train.terrain_levels");
    for (std::size_t e = 0; e < envs_.size() && e < static_cast<std::size_t>(levels.size()); ++e)
      envs_[e].set_level(static_cast<int>(levels[e]));
    for (auto& env : envs_) env.reset();
  }

  int iteration() const { return iteration_; }
  PolicyStack& policy() { return policy_; }
  CriticStack& critic() { return critic_; }
  Discriminator& discriminator() { return disc_; }
  std::vector<HexEnv>& envs() { return envs_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  static double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }

  RobotModel model_;
  TrainConfig cfg_;
  EnvConfig env_cfg_;
  const PriorDataset* dataset_;
  TerrainPool pool_;
  Rng rng_;
  PolicyStack policy_;
  CriticStack critic_;
  Discriminator disc_;
  std::vector<HexEnv> envs_;
  RolloutBuffer buf_;
  int iteration_ = 0;
};

/// Loads just the policy networks (deployment view) from a checkpoint.
struct DeployedPolicy {
  PolicyStack policy;
  Eigen::VectorXd norm_mean, norm_std;

  static DeployedPolicy load(const std::string& path) {
    const TensorStore store = load_tensor_store(path);
    DeployedPolicy d;
    d.policy.estimator = unpack_mlp(store, "policy.estimator");
    d.policy.memory = unpack_mlp(store, "policy.memory");
    d.policy.low = unpack_mlp(store, "policy.low");
    d.policy.head.log_std = store.get_vector("policy.log_std");
    d.norm_mean = store.get_vector("norm.mean");
    d.norm_std = store.get_vector("norm.std");
    return d;
  }
};

}  // namespace hexamp
