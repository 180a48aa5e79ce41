#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

#include "hexamp/math.hpp"
#include "hexamp/net.hpp"
#include "hexamp/priors.hpp"

namespace hexamp {

inline constexpr int kTransitionDim = 2 * kAmpDim;  // 122

/// A batch of consecutive-frame transition pairs, one 122-dim column per
/// pair, tagged with its origin. `normalized` must be set with the prior
/// dataset stats before the batch may touch the discriminator.
struct TransitionBatch {
  enum class Source { prior, policy };
  Eigen::MatrixXd pairs;  // 122 x n
  Source source = Source::policy;
  bool normalized = false;

  Eigen::Index size() const { return pairs.cols(); }
};

/// LS-GAN style discriminator over normalized transition pairs.
struct Discriminator {
  Mlp net;
  AdamState adam;
  double alpha_gp = 10.0;
  Eigen::VectorXd norm_mean;  // 61
  Eigen::VectorXd norm_std;   // 61

  Discriminator() = default;
  Discriminator(Rng& rng, double lr = 3e-4, double gp = 10.0)
      : net({kTransitionDim, 1024, 512, 1}), alpha_gp(gp) {
    init_mlp(net, rng);
    adam = AdamState(net, lr);
  }

  void set_normalizer(const PriorDataset& ds) {
    norm_mean = ds.mean;
    norm_std = ds.std;
  }

  /// Raw scores, one per column pair.
  Eigen::VectorXd score(const TransitionBatch& batch) const {
    if (!batch.normalized)
      throw std::invalid_argument("discriminator: batch is not normalized");
    return forward(net, batch.pairs).transpose();
  }
};

/// Normalizing an already-normalized batch is a no-op.
inline void normalize_batch(TransitionBatch& batch, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std_dev) {
  if (batch.normalized) return;
  for (Eigen::Index c = 0; c < batch.pairs.cols(); ++c) {
    batch.pairs.col(c).head(kAmpDim) =
        (batch.pairs.col(c).head(kAmpDim) - mean).cwiseQuotient(std_dev);
    batch.pairs.col(c).tail(kAmpDim) =
        (batch.pairs.col(c).tail(kAmpDim) - mean).cwiseQuotient(std_dev);
  }
  batch.normalized = true;
}

struct DiscriminatorLossParts {
  double real = 0;      // mean (D(real) - 1)^2
  double fake = 0;      // mean (D(fake) + 1)^2
  double penalty = 0;   // (alpha_gp / 2) * mean ||grad_x D(real)||^2
  double real_score_mean = 0;
  double fake_score_mean = 0;
  double total() const { return real + fake + penalty; }
};

/// Least-squares GAN objective with an input-gradient penalty on real
/// samples. Evaluation only; no gradients are produced.
inline DiscriminatorLossParts discriminator_loss(const Discriminator& disc,
                                                 const TransitionBatch& real,
                                                 const TransitionBatch& fake) {
  if (real.size() == 0 || fake.size() == 0)
    throw std::invalid_argument("discriminator_loss: empty batch");
  if (!real.normalized || !fake.normalized)
    throw std::invalid_argument("discriminator_loss: unnormalized batch");
  DiscriminatorLossParts parts;
  const Eigen::VectorXd dr = forward(disc.net, real.pairs).transpose();
  const Eigen::VectorXd df = forward(disc.net, fake.pairs).transpose();
  parts.real = (dr.array() - 1.0).square().mean();
  parts.fake = (df.array() + 1.0).square().mean();

  MlpCache cache;
  forward_cached(disc.net, real.pairs, cache);
  const Eigen::MatrixXd g =
      input_gradient(disc.net, cache, Eigen::MatrixXd::Ones(1, real.size()));
  parts.penalty = disc.alpha_gp / 2.0 * g.squaredNorm() / static_cast<double>(real.size());
  return parts;
}

/// Eq.-style reward in [0, 1], maximal at a score of 1.
inline double style_reward(double d_score) {
  return std::max(0.0, 1.0 - 0.25 * square(d_score - 1.0));
}

struct DiscriminatorMetrics {
  std::vector<double> loss;       // per update, total objective
  std::vector<double> real_mean;  // per update, mean D(real)
  std::vector<double> fake_mean;  // per update, mean D(fake)
};

/// One Adam update on a balanced real/fake batch. Returns the loss parts at
/// the pre-update parameters.
inline DiscriminatorLossParts discriminator_update(Discriminator& disc,
                                                   const Eigen::MatrixXd& real_pairs,
                                                   const Eigen::MatrixXd& fake_pairs) {
  const Eigen::Index nr = real_pairs.cols();
  const Eigen::Index nf = fake_pairs.cols();
  disc.net.zero_grad();

  MlpCache cache;
  DiscriminatorLossParts parts;

  forward_cached(disc.net, real_pairs, cache);
  const Eigen::MatrixXd dr = cache.pre.back();
  parts.real = (dr.array() - 1.0).square().mean();
  parts.real_score_mean = dr.mean();
  Eigen::MatrixXd grad_r = 2.0 / static_cast<double>(nr) * (dr.array() - 1.0).matrix();
  backward(disc.net, cache, grad_r);

  forward_cached(disc.net, fake_pairs, cache);
  const Eigen::MatrixXd df = cache.pre.back();
  parts.fake = (df.array() + 1.0).square().mean();
  parts.fake_score_mean = df.mean();
  Eigen::MatrixXd grad_f = 2.0 / static_cast<double>(nf) * (df.array() + 1.0).matrix();
  backward(disc.net, cache, grad_f);

  parts.penalty =
      disc.alpha_gp / 2.0 * gradient_penalty_backward(disc.net, real_pairs, disc.alpha_gp / 2.0);

  adam_step(disc.net, disc.adam);
  return parts;
}

/// Runs `steps` balanced updates, sampling real pairs from the dataset and
/// fake pairs (with replacement) from the rollout's transitions.
inline DiscriminatorMetrics update_discriminator(Discriminator& disc, const PriorDataset& dataset,
                                                 const TransitionBatch& policy_pairs, int steps,
                                                 int batch, Rng& rng) {
  if (policy_pairs.size() == 0)
    throw std::invalid_argument("update_discriminator: empty policy batch");
  if (!policy_pairs.normalized)
    throw std::invalid_argument("update_discriminator: unnormalized policy batch");
  DiscriminatorMetrics metrics;
  for (int s = 0; s < steps; ++s) {
    const Eigen::MatrixXd real = sample_real_pairs(dataset, batch, rng);
    Eigen::MatrixXd fake(kTransitionDim, batch);
    for (int b = 0; b < batch; ++b)
      fake.col(b) = policy_pairs.pairs.col(rng.uniform_int(static_cast<int>(policy_pairs.size())));
    const DiscriminatorLossParts parts = discriminator_update(disc, real, fake);
    metrics.loss.push_back(parts.total());
    metrics.real_mean.push_back(parts.real_score_mean);
    metrics.fake_mean.push_back(parts.fake_score_mean);
  }
  return metrics;
}

}  // namespace hexamp
