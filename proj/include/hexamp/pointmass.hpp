#pragma once

#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "hexamp/math.hpp"
#include "hexamp/net.hpp"
#include "hexamp/rl.hpp"

namespace hexamp {

/// 1-D point-mass velocity tracking: the smallest closed loop through the
/// same PPO machinery the locomotion trainer uses. Observation (v, v_des),
/// scalar acceleration action, reward exp(-(v - v_des)^2 / 0.15).
struct PointMassConfig {
  int env_count = 16;
  int horizon = 32;
  int episode_steps = 50;
  double dt = 0.1;
  double gamma = 0.99;
  double lam = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double value_coef = 1.0;
  double entropy_coef = 0.005;
  double lr = 1e-3;
  double kl_target = 0.01;
};

struct PointMassResult {
  std::vector<double> mean_step_reward;  // one entry per iteration
};

inline PointMassResult train_pointmass(std::uint64_t seed, int iterations,
                                       const PointMassConfig& cfg = {}) {
  Rng net_rng(split_seed(seed, 0x91));
  Mlp actor({2, 32, 32, 1});
  Mlp critic({2, 32, 32, 1});
  init_mlp(actor, net_rng, 0.01);
  init_mlp(critic, net_rng);
  GaussianPolicyHead head(1, 1.0);
  AdamState actor_adam(actor, cfg.lr), critic_adam(critic, cfg.lr);
  AdamVecState logstd_adam(1, cfg.lr);
  double lr = cfg.lr;

  const int E = cfg.env_count;
  const int H = cfg.horizon;
  const int N = E * H;

  std::vector<Rng> env_rng;
  for (int e = 0; e < E; ++e) env_rng.emplace_back(split_seed(seed, 0x2000 + e));
  Eigen::VectorXd vel = Eigen::VectorXd::Zero(E);
  Eigen::VectorXd target(E);
  std::vector<int> steps(E, 0);
  for (int e = 0; e < E; ++e) target[e] = env_rng[e].uniform(-1.0, 1.0);

  Rng train_rng(split_seed(seed, 0x92));
  PointMassResult result;

  Eigen::MatrixXd obs(2, N);
  Eigen::VectorXd actions(N), logp(N), rewards(N), values(N), dones(N);

  for (int iter = 0; iter < iterations; ++iter) {
    // rollout
    for (int t = 0; t < H; ++t) {
      Eigen::MatrixXd ob(2, E);
      for (int e = 0; e < E; ++e) ob.col(e) = Eigen::Vector2d(vel[e], target[e]);
      const Eigen::MatrixXd mean = forward(actor, ob);
      const Eigen::MatrixXd val = forward(critic, ob);
      for (int e = 0; e < E; ++e) {
        const int i = t * E + e;
        obs.col(i) = ob.col(e);
        Eigen::VectorXd mu(1);
        mu[0] = mean(0, e);
        const Eigen::VectorXd a = head.sample(mu, env_rng[e]);
        actions[i] = a[0];
        logp[i] = head.log_prob(mu, a);
        values[i] = val(0, e);
        vel[e] += cfg.dt * clamp(a[0], -3.0, 3.0);
        rewards[i] = std::exp(-square(vel[e] - target[e]) / 0.15);
        steps[e] += 1;
        if (steps[e] >= cfg.episode_steps) {
          dones[i] = 1.0;
          vel[e] = 0.0;
          steps[e] = 0;
          target[e] = env_rng[e].uniform(-1.0, 1.0);
        } else {
          dones[i] = 0.0;
        }
      }
    }
    result.mean_step_reward.push_back(rewards.mean());

    Eigen::VectorXd bootstrap(E);
    {
      Eigen::MatrixXd ob(2, E);
      for (int e = 0; e < E; ++e) ob.col(e) = Eigen::Vector2d(vel[e], target[e]);
      bootstrap = forward(critic, ob).transpose();
    }
    const GaeResult gae = compute_gae(rewards, values, dones, bootstrap, E, cfg.gamma, cfg.lam);
    Eigen::VectorXd adv = gae.advantages;
    adv.array() -= adv.mean();
    adv /= std::sqrt(adv.array().square().sum() / N) + 1e-8;

    // PPO epochs
    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    const int mb_size = N / cfg.minibatches;
    double kl_acc = 0;
    int updates = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (int i = N - 1; i > 0; --i) std::swap(order[i], order[train_rng.uniform_int(i + 1)]);
      for (int mb = 0; mb < cfg.minibatches; ++mb) {
        const int start = mb * mb_size;
        const int count = (mb + 1 == cfg.minibatches) ? N - start : mb_size;
        Eigen::MatrixXd mb_obs(2, count);
        Eigen::VectorXd mb_act(count), mb_oldlp(count), mb_adv(count), mb_ret(count);
        for (int k = 0; k < count; ++k) {
          const int i = order[start + k];
          mb_obs.col(k) = obs.col(i);
          mb_act[k] = actions[i];
          mb_oldlp[k] = logp[i];
          mb_adv[k] = adv[i];
          mb_ret[k] = gae.returns[i];
        }
        MlpCache a_cache, c_cache;
        forward_cached(actor, mb_obs, a_cache);
        const Eigen::MatrixXd mean = a_cache.pre.back();
        forward_cached(critic, mb_obs, c_cache);
        const Eigen::MatrixXd val = c_cache.pre.back();

        const double sigma = std::exp(head.log_std[0]);
        Eigen::VectorXd new_logp(count), z(count);
        const double logp_const = -0.5 * std::log(2.0 * kPi) - head.log_std[0];
        for (int k = 0; k < count; ++k) {
          z[k] = (mb_act[k] - mean(0, k)) / sigma;
          new_logp[k] = logp_const - 0.5 * z[k] * z[k];
        }
        const SurrogateOut surr = clipped_surrogate(new_logp, mb_oldlp, mb_adv, cfg.clip);
        kl_acc += surr.kl;
        ++updates;

        actor.zero_grad();
        critic.zero_grad();
        Eigen::MatrixXd mean_grad(1, count);
        for (int k = 0; k < count; ++k) mean_grad(0, k) = surr.dlogp[k] * z[k] / sigma;
        backward(actor, a_cache, mean_grad);
        Eigen::VectorXd logstd_grad(1);
        logstd_grad[0] = -cfg.entropy_coef;
        for (int k = 0; k < count; ++k) logstd_grad[0] += surr.dlogp[k] * (z[k] * z[k] - 1.0);
        const Eigen::VectorXd v_err = val.transpose() - mb_ret;
        Eigen::MatrixXd value_grad = (2.0 * cfg.value_coef / count) * v_err.transpose();
        backward(critic, c_cache, value_grad);

        adam_step(actor, actor_adam);
        adam_step(critic, critic_adam);
        adam_step(head.log_std, logstd_grad, logstd_adam);
      }
    }
    lr = adaptive_lr(lr, kl_acc / updates, cfg.kl_target);
    actor_adam.lr = critic_adam.lr = logstd_adam.lr = lr;
  }
  return result;
}

}  // namespace hexamp
