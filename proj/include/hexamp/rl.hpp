#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexamp/amp.hpp"
#include "hexamp/checkpoint.hpp"
#include "hexamp/env.hpp"
#include "hexamp/net.hpp"
#include "hexamp/priors.hpp"

namespace hexamp {

inline constexpr int kMemOutDim = 32;
inline constexpr int kEstOutDim = 3;
inline constexpr int kPrivLatentDim = 8;
inline constexpr int kTerrLatentDim = 16;
inline constexpr int kLowInDim = kCmdDim + kActDim + kPropDim + kEstOutDim + kMemOutDim;  // 98
inline constexpr int kCriticInDim = kCmdDim + kActDim + kPropDim + kPrivLatentDim + kTerrLatentDim;  // 87

/// Actor-side networks: velocity estimator and memory encoder over the
/// 5-step proprioceptive history, low-level action net, Gaussian head.
struct PolicyStack {
  Mlp estimator;  // 210 -> [64, 32] -> 3
  Mlp memory;     // 210 -> [512, 256, 128] -> 32
  Mlp low;        // 98 -> [256, 128, 64] -> 18
  GaussianPolicyHead head;
  AdamState est_adam, mem_adam, low_adam;
  AdamVecState logstd_adam;

  PolicyStack() = default;
  PolicyStack(Rng& rng, double lr)
      : estimator({kHistDim, 64, 32, kEstOutDim}),
        memory({kHistDim, 512, 256, 128, kMemOutDim}),
        low({kLowInDim, 256, 128, 64, kActDim}),
        head(kActDim, 1.0) {
    init_mlp(estimator, rng);
    init_mlp(memory, rng);
    init_mlp(low, rng, 0.01);  // near-nominal initial actions
    est_adam = AdamState(estimator, lr);
    mem_adam = AdamState(memory, lr);
    low_adam = AdamState(low, lr);
    logstd_adam = AdamVecState(kActDim, lr);
  }

  void zero_grad() {
    estimator.zero_grad();
    memory.zero_grad();
    low.zero_grad();
  }
};

/// Critic-side networks: privileged and terrain encoders plus the value net.
struct CriticStack {
  Mlp priv_enc;  // 42 -> [64, 32] -> 8
  Mlp terr_enc;  // 187 -> [256, 128] -> 16
  Mlp value;     // 87 -> [512, 256, 128] -> 1
  AdamState p_adam, t_adam, v_adam;

  CriticStack() = default;
  CriticStack(Rng& rng, double lr)
      : priv_enc({kPrivDim, 64, 32, kPrivLatentDim}),
        terr_enc({kScanDim, 256, 128, kTerrLatentDim}),
        value({kCriticInDim, 512, 256, 128, 1}) {
    init_mlp(priv_enc, rng);
    init_mlp(terr_enc, rng);
    init_mlp(value, rng);
    p_adam = AdamState(priv_enc, lr);
    t_adam = AdamState(terr_enc, lr);
    v_adam = AdamState(value, lr);
  }

  void zero_grad() {
    priv_enc.zero_grad();
    terr_enc.zero_grad();
    value.zero_grad();
  }
};

struct PolicyForward {
  Eigen::MatrixXd mean;  // 18 x B
  Eigen::MatrixXd est;   // 3 x B
};

inline Eigen::MatrixXd assemble_low_input(const Eigen::MatrixXd& cmd, const Eigen::MatrixXd& a_prev,
                                          const Eigen::MatrixXd& o_p, const Eigen::MatrixXd& est,
                                          const Eigen::MatrixXd& mem) {
  Eigen::MatrixXd in(kLowInDim, cmd.cols());
  in.topRows(kCmdDim) = cmd;
  in.middleRows(kCmdDim, kActDim) = a_prev;
  in.middleRows(kCmdDim + kActDim, kPropDim) = o_p;
  in.middleRows(kCmdDim + kActDim + kPropDim, kEstOutDim) = est;
  in.bottomRows(kMemOutDim) = mem;
  return in;
}

/// The current proprioceptive frame is the newest slice of the history.
inline Eigen::MatrixXd current_prop(const Eigen::MatrixXd& hist) {
  return hist.bottomRows(kPropDim);
}

inline PolicyForward policy_forward(const PolicyStack& policy, const Eigen::MatrixXd& hist,
                                    const Eigen::MatrixXd& cmd, const Eigen::MatrixXd& a_prev) {
  PolicyForward out;
  out.est = forward(policy.estimator, hist);
  const Eigen::MatrixXd mem = forward(policy.memory, hist);
  out.mean = forward(policy.low, assemble_low_input(cmd, a_prev, current_prop(hist), out.est, mem));
  return out;
}

struct PolicyCaches {
  MlpCache est, mem, low;
};

inline PolicyForward policy_forward_cached(const PolicyStack& policy, const Eigen::MatrixXd& hist,
                                           const Eigen::MatrixXd& cmd,
                                           const Eigen::MatrixXd& a_prev, PolicyCaches& caches) {
  PolicyForward out;
  out.est = forward_cached(policy.estimator, hist, caches.est);
  const Eigen::MatrixXd mem = forward_cached(policy.memory, hist, caches.mem);
  forward_cached(policy.low, assemble_low_input(cmd, a_prev, current_prop(hist), out.est, mem),
                 caches.low);
  out.mean = caches.low.pre.back();
  return out;
}

/// Backpropagates the action-mean gradient through the low-level net into
/// both history encoders; `est_extra_grad` carries the supervised velocity
/// loss straight onto the estimator output.
inline void policy_backward(PolicyStack& policy, const PolicyCaches& caches,
                            const Eigen::MatrixXd& mean_grad,
                            const Eigen::MatrixXd& est_extra_grad) {
  const Eigen::MatrixXd low_in_grad = backward(policy.low, caches.low, mean_grad);
  Eigen::MatrixXd est_grad =
      low_in_grad.middleRows(kCmdDim + kActDim + kPropDim, kEstOutDim) + est_extra_grad;
  backward(policy.estimator, caches.est, est_grad);
  backward(policy.memory, caches.mem, low_in_grad.bottomRows(kMemOutDim));
}

inline Eigen::MatrixXd critic_forward(const CriticStack& critic, const Eigen::MatrixXd& cmd,
                                      const Eigen::MatrixXd& a_prev, const Eigen::MatrixXd& o_p,
                                      const Eigen::MatrixXd& priv, const Eigen::MatrixXd& scan) {
  const Eigen::MatrixXd lp = forward(critic.priv_enc, priv);
  const Eigen::MatrixXd le = forward(critic.terr_enc, scan);
  Eigen::MatrixXd in(kCriticInDim, cmd.cols());
  in.topRows(kCmdDim) = cmd;
  in.middleRows(kCmdDim, kActDim) = a_prev;
  in.middleRows(kCmdDim + kActDim, kPropDim) = o_p;
  in.middleRows(kCmdDim + kActDim + kPropDim, kPrivLatentDim) = lp;
  in.bottomRows(kTerrLatentDim) = le;
  return forward(critic.value, in);
}

struct CriticCaches {
  MlpCache penc, tenc, value;
};

inline Eigen::MatrixXd critic_forward_cached(const CriticStack& critic, const Eigen::MatrixXd& cmd,
                                             const Eigen::MatrixXd& a_prev,
                                             const Eigen::MatrixXd& o_p,
                                             const Eigen::MatrixXd& priv,
                                             const Eigen::MatrixXd& scan, CriticCaches& caches) {
  const Eigen::MatrixXd lp = forward_cached(critic.priv_enc, priv, caches.penc);
  const Eigen::MatrixXd le = forward_cached(critic.terr_enc, scan, caches.tenc);
  Eigen::MatrixXd in(kCriticInDim, cmd.cols());
  in.topRows(kCmdDim) = cmd;
  in.middleRows(kCmdDim, kActDim) = a_prev;
  in.middleRows(kCmdDim + kActDim, kPropDim) = o_p;
  in.middleRows(kCmdDim + kActDim + kPropDim, kPrivLatentDim) = lp;
  in.bottomRows(kTerrLatentDim) = le;
  return forward_cached(critic.value, in, caches.value);
}

inline void critic_backward(CriticStack& critic, const CriticCaches& caches,
                            const Eigen::MatrixXd& value_grad) {
  const Eigen::MatrixXd in_grad = backward(critic.value, caches.value, value_grad);
  backward(critic.priv_enc, caches.penc,
           in_grad.middleRows(kCmdDim + kActDim + kPropDim, kPrivLatentDim));
  backward(critic.terr_enc, caches.tenc, in_grad.bottomRows(kTerrLatentDim));
}

struct TrainConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double value_coef = 1.0;
  double entropy_coef = 0.005;
  double estimator_coef = 1.0;
  double lr = 1e-3;
  double kl_target = 0.01;
  int horizon = 24;
  int env_count = 64;
  int max_iterations = 300;
  int disc_updates = 2;
  int disc_batch = 256;
  double disc_lr = 3e-4;
  int disc_warmup_updates = 200;
  double alpha_gp = 10.0;
  int checkpoint_interval = 100;

  void validate() const {
    if (gamma <= 0 || gamma > 1) throw std::invalid_argument("gamma must be in (0, 1]");
    if (lam <= 0 || lam > 1) throw std::invalid_argument("lambda must be in (0, 1]");
    if (clip <= 0) throw std::invalid_argument("clip must be > 0");
  }
};

/// Step-major rollout storage: column t * env_count + e.
struct RolloutBuffer {
  int horizon = 0;
  int env_count = 0;
  Eigen::MatrixXd hist;    // 210 x N
  Eigen::MatrixXd cmd;     // 3 x N
  Eigen::MatrixXd a_prev;  // 18 x N
  Eigen::MatrixXd priv;    // 42 x N
  Eigen::MatrixXd scan;    // 187 x N
  Eigen::MatrixXd action;  // 18 x N
  Eigen::MatrixXd true_v;  // 3 x N
  Eigen::VectorXd log_prob;
  Eigen::VectorXd reward;
  Eigen::VectorXd value;
  Eigen::VectorXd done;  // 1.0 when the episode ended at this step
  Eigen::VectorXd bootstrap_value;  // per env, value of the post-rollout state
  TransitionBatch amp_pairs;        // normalized policy transitions, 122 x N
  // per-iteration reward statistics
  double mean_task = 0, mean_style = 0, mean_penalty = 0, mean_total = 0;
  std::vector<EpisodeResult> episodes;
  double mean_inprogress_len = 0;

  RolloutBuffer(int horizon_steps, int envs) : horizon(horizon_steps), env_count(envs) {
    const int n = horizon * env_count;
    hist.setZero(kHistDim, n);
    cmd.setZero(kCmdDim, n);
    a_prev.setZero(kActDim, n);
    priv.setZero(kPrivDim, n);
    scan.setZero(kScanDim, n);
    action.setZero(kActDim, n);
    true_v.setZero(3, n);
    log_prob.setZero(n);
    reward.setZero(n);
    value.setZero(n);
    done.setZero(n);
    bootstrap_value.setZero(env_count);
    amp_pairs.pairs.setZero(kTransitionDim, n);
    amp_pairs.source = TransitionBatch::Source::policy;
    amp_pairs.normalized = true;
  }

  int size() const { return horizon * env_count; }
};

/// Fills the buffer with `horizon` steps from every environment. The
/// discriminator scores each step's transition for the style reward.
inline void collect_rollout(const PolicyStack& policy, const CriticStack& critic,
                            const Discriminator& disc, std::vector<HexEnv>& envs,
                            RolloutBuffer& buf, bool deterministic = false) {
  const int E = static_cast<int>(envs.size());
  const int H = buf.horizon;
  buf.episodes.clear();
  double task_sum = 0, style_sum = 0, pen_sum = 0, tot_sum = 0;

  Eigen::MatrixXd hist(kHistDim, E), cmd(kCmdDim, E), a_prev(kActDim, E);
  Eigen::MatrixXd priv(kPrivDim, E), scan(kScanDim, E);
  Eigen::MatrixXd amp_before(kAmpDim, E);

  for (int t = 0; t < H; ++t) {
    for (int e = 0; e < E; ++e) {
      hist.col(e) = envs[e].history();
      cmd.col(e) = envs[e].command();
      a_prev.col(e) = envs[e].prev_action();
      priv.col(e) = envs[e].privileged();
      scan.col(e) = envs[e].scan();
      amp_before.col(e) = envs[e].amp_state();
    }
    const PolicyForward pf = policy_forward(policy, hist, cmd, a_prev);
    const Eigen::MatrixXd values = critic_forward(critic, cmd, a_prev, current_prop(hist), priv, scan);

    Eigen::MatrixXd actions(kActDim, E);
    for (int e = 0; e < E; ++e) {
      const Eigen::VectorXd mean = pf.mean.col(e);
      const Eigen::VectorXd a = deterministic ? mean : policy.head.sample(mean, envs[e].rng());
      actions.col(e) = a;
      const int i = t * E + e;
      buf.log_prob[i] = policy.head.log_prob(mean, a);
      buf.true_v.col(i) = envs[e].true_base_velocity();
    }

    // step the simulators and collect post-step transitions
    Eigen::MatrixXd amp_after(kAmpDim, E);
    for (int e = 0; e < E; ++e) {
      envs[e].step_control(actions.col(e));
      amp_after.col(e) = envs[e].amp_state();
    }

    // score the transitions for the style reward
    TransitionBatch step_pairs;
    step_pairs.pairs.resize(kTransitionDim, E);
    for (int e = 0; e < E; ++e) {
      step_pairs.pairs.col(e).head(kAmpDim) =
          (amp_before.col(e) - disc.norm_mean).cwiseQuotient(disc.norm_std);
      step_pairs.pairs.col(e).tail(kAmpDim) =
          (amp_after.col(e) - disc.norm_mean).cwiseQuotient(disc.norm_std);
    }
    step_pairs.normalized = true;
    const Eigen::VectorXd d_scores = disc.score(step_pairs);

    for (int e = 0; e < E; ++e) {
      const int i = t * E + e;
      buf.hist.col(i) = hist.col(e);
      buf.cmd.col(i) = cmd.col(e);
      buf.a_prev.col(i) = a_prev.col(e);
      buf.priv.col(i) = priv.col(e);
      buf.scan.col(i) = scan.col(e);
      buf.action.col(i) = actions.col(e);
      buf.value[i] = values(0, e);
      buf.amp_pairs.pairs.col(i) = step_pairs.pairs.col(e);

      const RewardBreakdown rb = envs[e].reward(actions.col(e), style_reward(d_scores[e]));
      const double total = total_reward(rb, envs[e].reward_config());
      buf.reward[i] = total;
      task_sum += rb.r_task;
      style_sum += rb.r_style;
      pen_sum += rb.r_penalty;
      tot_sum += total;
      envs[e].finish_step(actions.col(e), rb.lin);

      const bool terminated = envs[e].terminated();
      const bool timeout = envs[e].time_limit_reached();
      if (terminated || timeout) {
        buf.done[i] = 1.0;
        EpisodeResult res = envs[e].episode_result(terminated);
        res.env_index = e;
        buf.episodes.push_back(res);
        envs[e].reset();
      } else {
        buf.done[i] = 0.0;
      }
    }
  }

  // bootstrap values for the states following the last step
  for (int e = 0; e < E; ++e) {
    hist.col(e) = envs[e].history();
    cmd.col(e) = envs[e].command();
    a_prev.col(e) = envs[e].prev_action();
    priv.col(e) = envs[e].privileged();
    scan.col(e) = envs[e].scan();
  }
  buf.bootstrap_value =
      critic_forward(critic, cmd, a_prev, current_prop(hist), priv, scan).transpose();

  const int n = buf.size();
  buf.mean_task = task_sum / n;
  buf.mean_style = style_sum / n;
  buf.mean_penalty = pen_sum / n;
  buf.mean_total = tot_sum / n;
  double len_sum = 0;
  for (auto& env : envs) len_sum += env.episode_steps();
  buf.mean_inprogress_len = len_sum / E;
}

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// GAE(gamma, lambda) over a step-major buffer. `dones` mark steps whose
/// successor state was a reset; the bootstrap vector supplies the value of
/// each environment's state after the final step.
inline GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                             const Eigen::VectorXd& dones, const Eigen::VectorXd& bootstrap,
                             int env_count, double gamma, double lam) {
  if (rewards.size() != values.size() || rewards.size() != dones.size())
    throw std::invalid_argument("compute_gae: length mismatch");
  if (env_count <= 0 || rewards.size() % env_count != 0)
    throw std::invalid_argument("compute_gae: size not divisible by env_count");
  if (bootstrap.size() != env_count)
    throw std::invalid_argument("compute_gae: bootstrap size mismatch");
  const int horizon = static_cast<int>(rewards.size()) / env_count;
  GaeResult r;
  r.advantages.setZero(rewards.size());
  for (int e = 0; e < env_count; ++e) {
    double gae = 0.0;
    for (int t = horizon - 1; t >= 0; --t) {
      const int i = t * env_count + e;
      const double nonterminal = 1.0 - dones[i];
      const double next_value =
          (t == horizon - 1) ? bootstrap[e] : values[(t + 1) * env_count + e];
      const double delta = rewards[i] + gamma * next_value * nonterminal - values[i];
      gae = delta + gamma * lam * nonterminal * gae;
      r.advantages[i] = gae;
    }
  }
  r.returns = r.advantages + values;
  return r;
}

/// Clipped-surrogate pieces shared by the trainers: per-sample loss and the
/// gradient coefficient with respect to the new log-probability.
struct SurrogateOut {
  double loss = 0;       // mean of -min(ratio*A, clip(ratio)*A)
  double kl = 0;         // mean (ratio - 1) - log ratio
  Eigen::VectorXd dlogp; // d loss / d new_logp, already averaged
};

inline SurrogateOut clipped_surrogate(const Eigen::VectorXd& new_logp,
                                      const Eigen::VectorXd& old_logp,
                                      const Eigen::VectorXd& adv, double clip) {
  const Eigen::Index n = new_logp.size();
  SurrogateOut out;
  out.dlogp.setZero(n);
  double loss = 0, kl = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double logratio = new_logp[i] - old_logp[i];
    const double ratio = std::exp(logratio);
    const double surr1 = ratio * adv[i];
    const double clipped = clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double surr2 = clipped * adv[i];
    loss += -std::min(surr1, surr2);
    if (surr1 <= surr2) out.dlogp[i] = -adv[i] * ratio / static_cast<double>(n);
    kl += (ratio - 1.0) - logratio;
  }
  out.loss = loss / static_cast<double>(n);
  out.kl = kl / static_cast<double>(n);
  return out;
}

/// KL-adaptive learning-rate rule: halve above 4x target, grow 1.5x below
/// a quarter of the target.
inline double adaptive_lr(double lr, double kl, double kl_target) {
  if (kl > 4.0 * kl_target) lr *= 0.5;
  else if (kl < kl_target / 4.0) lr *= 1.5;
  return clamp(lr, 1e-5, 1e-2);
}

struct UpdateMetrics {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double est_mse = 0;
  double kl = 0;
  double lr = 0;
};

/// Whole-batch advantage normalization to zero mean and unit deviation.
inline Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& advantages) {
  const double mean = advantages.mean();
  const double stddev =
      std::sqrt((advantages.array() - mean).square().sum() / advantages.size());
  return (advantages.array() - mean) / (stddev + 1e-8);
}

/// PPO update with the supervised velocity-estimator loss folded into the
/// policy graph. Advantages are normalized once over the whole buffer.
inline UpdateMetrics ppo_update(PolicyStack& policy, CriticStack& critic, RolloutBuffer& buf,
                                const GaeResult& gae, TrainConfig& cfg, Rng& rng) {
  const int n = buf.size();
  const Eigen::VectorXd adv = normalize_advantages(gae.advantages);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateMetrics m;
  int update_count = 0;
  const int mb_size = n / cfg.minibatches;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the trainer stream
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int start = mb * mb_size;
      const int count = (mb + 1 == cfg.minibatches) ? n - start : mb_size;

      Eigen::MatrixXd hist(kHistDim, count), cmd(kCmdDim, count), a_prev(kActDim, count);
      Eigen::MatrixXd priv(kPrivDim, count), scan(kScanDim, count), act(kActDim, count);
      Eigen::MatrixXd true_v(3, count);
      Eigen::VectorXd old_logp(count), mb_adv(count), mb_ret(count);
      for (int k = 0; k < count; ++k) {
        const int i = order[start + k];
        hist.col(k) = buf.hist.col(i);
        cmd.col(k) = buf.cmd.col(i);
        a_prev.col(k) = buf.a_prev.col(i);
        priv.col(k) = buf.priv.col(i);
        scan.col(k) = buf.scan.col(i);
        act.col(k) = buf.action.col(i);
        true_v.col(k) = buf.true_v.col(i);
        old_logp[k] = buf.log_prob[i];
        mb_adv[k] = adv[i];
        mb_ret[k] = gae.returns[i];
      }

      PolicyCaches pc;
      const PolicyForward pf = policy_forward_cached(policy, hist, cmd, a_prev, pc);
      CriticCaches cc;
      const Eigen::MatrixXd v_pred =
          critic_forward_cached(critic, cmd, a_prev, current_prop(hist), priv, scan, cc);

      // new log-probs under the current parameters
      const Eigen::VectorXd sigma = policy.head.std();
      Eigen::VectorXd new_logp(count);
      Eigen::MatrixXd z(kActDim, count);
      const double logp_const = -0.5 * kActDim * std::log(2.0 * kPi) - policy.head.log_std.sum();
      for (int k = 0; k < count; ++k) {
        z.col(k) = (act.col(k) - pf.mean.col(k)).cwiseQuotient(sigma);
        new_logp[k] = logp_const - 0.5 * z.col(k).squaredNorm();
      }

      const SurrogateOut surr = clipped_surrogate(new_logp, old_logp, mb_adv, cfg.clip);

      // value loss
      const Eigen::VectorXd v_err = v_pred.transpose() - mb_ret;
      const double value_loss = v_err.squaredNorm() / count;

      // estimator loss
      const Eigen::MatrixXd est_err = pf.est - true_v;
      const double est_mse = est_err.squaredNorm() / count;

      const double entropy = policy.head.entropy();
      const double total_loss = surr.loss + cfg.value_coef * value_loss -
                                cfg.entropy_coef * entropy + cfg.estimator_coef * est_mse;
      if (!std::isfinite(total_loss))
        throw std::runtime_error("ppo_update: non-finite loss (policy " +
                                 std::to_string(surr.loss) + ", value " +
                                 std::to_string(value_loss) + ")");

      // gradients
      policy.zero_grad();
      critic.zero_grad();

      // d logp / d mean = z / sigma, scaled by the surrogate coefficient
      Eigen::MatrixXd mean_grad(kActDim, count);
      for (int k = 0; k < count; ++k)
        mean_grad.col(k) = surr.dlogp[k] * z.col(k).cwiseQuotient(sigma);
      const Eigen::MatrixXd est_grad = (2.0 * cfg.estimator_coef / count) * est_err;
      policy_backward(policy, pc, mean_grad, est_grad);

      // log-std gradient: surrogate + entropy bonus
      Eigen::VectorXd logstd_grad = Eigen::VectorXd::Zero(kActDim);
      for (int k = 0; k < count; ++k)
        logstd_grad += surr.dlogp[k] * (z.col(k).array().square() - 1.0).matrix();
      logstd_grad.array() -= cfg.entropy_coef;

      const Eigen::MatrixXd value_grad =
          (2.0 * cfg.value_coef / count) * v_err.transpose();
      critic_backward(critic, cc, value_grad);

      adam_step(policy.estimator, policy.est_adam);
      adam_step(policy.memory, policy.mem_adam);
      adam_step(policy.low, policy.low_adam);
      adam_step(policy.head.log_std, logstd_grad, policy.logstd_adam);
      adam_step(critic.priv_enc, critic.p_adam);
      adam_step(critic.terr_enc, critic.t_adam);
      adam_step(critic.value, critic.v_adam);

      m.policy_loss += surr.loss;
      m.value_loss += value_loss;
      m.est_mse += est_mse;
      m.entropy += entropy;
      m.kl += surr.kl;
      ++update_count;
    }
  }

  m.policy_loss /= update_count;
  m.value_loss /= update_count;
  m.est_mse /= update_count;
  m.entropy /= update_count;
  m.kl /= update_count;

  cfg.lr = adaptive_lr(cfg.lr, m.kl, cfg.kl_target);
  m.lr = cfg.lr;
  policy.est_adam.lr = policy.mem_adam.lr = policy.low_adam.lr = cfg.lr;
  policy.logstd_adam.lr = cfg.lr;
  critic.p_adam.lr = critic.t_adam.lr = critic.v_adam.lr = cfg.lr;
  return m;
}

/// Applies the curriculum rule to every episode finished in the rollout.
inline void update_curriculum(std::vector<HexEnv>& envs, const std::vector<EpisodeResult>& results,
                              double lin_scale) {
  for (const EpisodeResult& r : results) {
    HexEnv& env = envs[r.env_index];
    env.set_level(update_curriculum_level(env.level(), r, lin_scale));
  }
}

struct IterationRow {
  int iteration = 0;
  double mean_total_reward = 0, mean_task = 0, mean_style = 0, mean_penalty = 0;
  double disc_loss = 0, disc_real_mean = 0, disc_fake_mean = 0;
  double est_mse = 0, mean_episode_len = 0, mean_terrain_level = 0;
  double lr = 0, kl = 0;
};

inline const char* kMetricsHeader =
    "iteration,mean_total_reward,mean_task,mean_style,mean_penalty,disc_loss,"
    "disc_real_mean,disc_fake_mean,est_mse,mean_episode_len,mean_terrain_level,lr,kl";

inline std::string format_metrics_row(const IterationRow& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << r.iteration << ',' << r.mean_total_reward << ',' << r.mean_task << ',' << r.mean_style
     << ',' << r.mean_penalty << ',' << r.disc_loss << ',' << r.disc_real_mean << ','
     << r.disc_fake_mean << ',' << r.est_mse << ',' << r.mean_episode_len << ','
     << r.mean_terrain_level << ',' << r.lr << ',' << r.kl;
  return os.str();
}

}  // namespace hexamp
