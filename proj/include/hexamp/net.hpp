#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexamp/math.hpp"

namespace hexamp {

// ELU (alpha = 1) and its first two derivatives
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_d(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
inline double elu_dd(double x) { return x > 0.0 ? 0.0 : std::exp(x); }

/// Dense network with ELU hidden layers and a linear output layer.
/// Weights are stored as (out x in) matrices; batches are column-major
/// (one sample per column). Gradient buffers live alongside parameters.
struct Mlp {
  std::vector<int> sizes;
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> gw;
  std::vector<Eigen::VectorXd> gb;

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes) : sizes(std::move(layer_sizes)) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp needs >= 2 layers");
    const int n = num_layers();
    w.resize(n);
    b.resize(n);
    gw.resize(n);
    gb.resize(n);
    for (int l = 0; l < n; ++l) {
      w[l].setZero(sizes[l + 1], sizes[l]);
      b[l].setZero(sizes[l + 1]);
      gw[l].setZero(sizes[l + 1], sizes[l]);
      gb[l].setZero(sizes[l + 1]);
    }
  }

  int num_layers() const { return static_cast<int>(sizes.size()) - 1; }
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }

  void zero_grad() {
    for (auto& g : gw) g.setZero();
    for (auto& g : gb) g.setZero();
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (int l = 0; l < num_layers(); ++l) n += w[l].size() + b[l].size();
    return n;
  }

  bool finite() const {
    for (const auto& m : w)
      if (!m.allFinite()) return false;
    for (const auto& v : b)
      if (!v.allFinite()) return false;
    return true;
  }
};

/// He-uniform fan-in init, zero biases. `last_layer_scale` shrinks the
/// output layer so freshly initialized heads start near zero.
inline void init_mlp(Mlp& net, Rng& rng, double last_layer_scale = 1.0) {
  for (int l = 0; l < net.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / net.sizes[l]);
    for (Eigen::Index j = 0; j < net.w[l].cols(); ++j)
      for (Eigen::Index i = 0; i < net.w[l].rows(); ++i)
        net.w[l](i, j) = rng.uniform(-limit, limit);
    net.b[l].setZero();
  }
  if (last_layer_scale != 1.0) net.w.back() *= last_layer_scale;
}

/// Per-layer activations kept for the backward pass.
struct MlpCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;  // preactivations, one per layer
  std::vector<Eigen::MatrixXd> act;  // post-ELU hidden activations
  bool valid = false;
};

inline Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) +
                                " rows, expected " + std::to_string(net.input_dim()));
  const int n = net.num_layers();
  Eigen::MatrixXd h = x;
  for (int l = 0; l < n; ++l) {
    Eigen::MatrixXd a = (net.w[l] * h).colwise() + net.b[l];
    if (l + 1 < n) a = a.unaryExpr([](double v) { return elu(v); });
    h = std::move(a);
  }
  return h;
}

inline Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x) {
  return forward(net, Eigen::MatrixXd(x));
}

inline const Eigen::MatrixXd& forward_cached(const Mlp& net, const Eigen::MatrixXd& x,
                                             MlpCache& cache) {
  if (x.rows() != net.input_dim())
    throw std::invalid_argument("forward_cached: bad input dim " + std::to_string(x.rows()));
  const int n = net.num_layers();
  cache.input = x;
  cache.pre.resize(n);
  cache.act.assign(n - 1, Eigen::MatrixXd());
  const Eigen::MatrixXd* h = &cache.input;
  for (int l = 0; l < n; ++l) {
    cache.pre[l] = (net.w[l] * (*h)).colwise() + net.b[l];
    if (l + 1 < n) {
      cache.act[l] = cache.pre[l].unaryExpr([](double v) { return elu(v); });
      h = &cache.act[l];
    }
  }
  cache.valid = true;
  return cache.pre.back();
}

/// Reverse-mode pass. Accumulates parameter gradients into net.gw/net.gb
/// and returns the gradient with respect to the input batch.
inline Eigen::MatrixXd backward(Mlp& net, const MlpCache& cache,
                                const Eigen::MatrixXd& output_grad) {
  if (!cache.valid) throw std::logic_error("backward: no forward cache");
  if (output_grad.rows() != net.output_dim() || output_grad.cols() != cache.input.cols())
    throw std::invalid_argument("backward: output_grad shape mismatch");
  const int n = net.num_layers();
  Eigen::MatrixXd delta = output_grad;
  for (int l = n - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below = (l == 0) ? cache.input : cache.act[l - 1];
    net.gw[l].noalias() += delta * below.transpose();
    net.gb[l] += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd up = net.w[l].transpose() * delta;
      delta = up.cwiseProduct(
          cache.pre[l - 1].unaryExpr([](double v) { return elu_d(v); }));
    } else {
      delta = net.w[0].transpose() * delta;
    }
  }
  return delta;  // input gradient
}

/// Gradient with respect to the input only (no parameter accumulation).
inline Eigen::MatrixXd input_gradient(const Mlp& net, const MlpCache& cache,
                                      const Eigen::MatrixXd& output_grad) {
  if (!cache.valid) throw std::logic_error("input_gradient: no forward cache");
  const int n = net.num_layers();
  Eigen::MatrixXd delta = output_grad;
  for (int l = n - 1; l >= 0; --l) {
    delta = net.w[l].transpose() * delta;
    if (l > 0)
      delta = delta.cwiseProduct(
          cache.pre[l - 1].unaryExpr([](double v) { return elu_d(v); }));
  }
  return delta;
}

/// For a scalar-output net, computes P = mean_b ||d y_b / d x_b||^2 over the
/// batch and accumulates coef * dP/dparams into the gradient buffers.
/// Returns P. This is the double-backward needed to train a discriminator
/// with an input-gradient penalty.
inline double gradient_penalty_backward(Mlp& net, const Eigen::MatrixXd& x,
                                        double coef) {
  if (net.output_dim() != 1)
    throw std::invalid_argument("gradient_penalty_backward: scalar-output nets only");
  const int n = net.num_layers();
  const Eigen::Index batch = x.cols();

  MlpCache cache;
  forward_cached(net, x, cache);

  // first derivatives of the hidden preactivations
  std::vector<Eigen::MatrixXd> dp(n - 1), ddp(n - 1);
  for (int l = 0; l + 1 < n; ++l) {
    dp[l] = cache.pre[l].unaryExpr([](double v) { return elu_d(v); });
    ddp[l] = cache.pre[l].unaryExpr([](double v) { return elu_dd(v); });
  }

  // reverse pass, batched: v[l] = d y / d a_l, u[l] = d y / d h_{l-1}
  std::vector<Eigen::MatrixXd> v(n), u(n);
  v[n - 1] = Eigen::MatrixXd::Ones(1, batch);
  for (int l = n - 1; l >= 0; --l) {
    u[l] = net.w[l].transpose() * v[l];
    if (l > 0) v[l - 1] = dp[l - 1].cwiseProduct(u[l]);
  }
  const Eigen::MatrixXd& g = u[0];  // input gradients, one column per sample
  const double penalty = g.squaredNorm() / static_cast<double>(batch);

  // adjoint seeds: dP/dg
  const double inv_b = 1.0 / static_cast<double>(batch);
  Eigen::MatrixXd gbar = (2.0 * inv_b) * g;

  // walk the reverse computation forward, collecting parameter adjoints.
  // aa[l] accumulates dP/da_l arising from the sigma'(a_l) factors.
  std::vector<Eigen::MatrixXd> aa(n - 1);
  for (int l = 0; l + 1 < n; ++l) aa[l].setZero(cache.pre[l].rows(), batch);

  Eigen::MatrixXd av = gbar;  // dP/dv[l] for the layer being processed
  for (int l = 0; l < n; ++l) {
    // u[l] = w[l]^T v[l]
    net.gw[l].noalias() += coef * (v[l] * av.transpose());
    if (l + 1 < n) {
      Eigen::MatrixXd avl = net.w[l] * av;  // dP/dv[l] -> continue up
      // v[l] = dp[l] .* u[l+1]
      Eigen::MatrixXd au = dp[l].cwiseProduct(avl);  // dP/du[l+1]
      aa[l] += ddp[l].cwiseProduct(u[l + 1]).cwiseProduct(avl);
      av = std::move(au);
    }
  }

  // propagate the a_l adjoints down the forward chain
  for (int l = n - 2; l >= 0; --l) {
    const Eigen::MatrixXd& below = (l == 0) ? cache.input : cache.act[l - 1];
    net.gw[l].noalias() += coef * (aa[l] * below.transpose());
    net.gb[l] += coef * aa[l].rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd ah = net.w[l].transpose() * aa[l];
      aa[l - 1] += dp[l - 1].cwiseProduct(ah);
    }
  }
  return penalty;
}

/// Bias-corrected Adam over one Mlp's parameters.
struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(const Mlp& net, double learning_rate = 1e-3) : lr(learning_rate) {
    const int n = net.num_layers();
    mw.resize(n);
    vw.resize(n);
    mb.resize(n);
    vb.resize(n);
    for (int l = 0; l < n; ++l) {
      mw[l].setZero(net.w[l].rows(), net.w[l].cols());
      vw[l].setZero(net.w[l].rows(), net.w[l].cols());
      mb[l].setZero(net.b[l].size());
      vb[l].setZero(net.b[l].size());
    }
  }
};

namespace detail {
template <typename P, typename G, typename M>
void adam_update(P& p, const G& g, M& m, M& v, const AdamState& s, double bc1, double bc2) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
  p.array() -= s.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.eps);
}
}  // namespace detail

/// Applies one Adam step from the net's gradient buffers. Faults on
/// non-finite gradients before touching any parameter.
inline void adam_step(Mlp& net, AdamState& adam) {
  for (int l = 0; l < net.num_layers(); ++l) {
    if (!net.gw[l].allFinite() || !net.gb[l].allFinite())
      throw std::runtime_error("adam_step: non-finite gradient in layer " + std::to_string(l));
  }
  adam.step += 1;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
  for (int l = 0; l < net.num_layers(); ++l) {
    detail::adam_update(net.w[l], net.gw[l], adam.mw[l], adam.vw[l], adam, bc1, bc2);
    detail::adam_update(net.b[l], net.gb[l], adam.mb[l], adam.vb[l], adam, bc1, bc2);
  }
}

/// Standalone Adam for a bare parameter vector (used by the policy log-std).
struct AdamVecState {
  Eigen::VectorXd m, v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamVecState() = default;
  explicit AdamVecState(Eigen::Index n, double learning_rate = 1e-3) : lr(learning_rate) {
    m.setZero(n);
    v.setZero(n);
  }
};

inline void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                      AdamVecState& adam) {
  if (!grads.allFinite()) throw std::runtime_error("adam_step: non-finite gradient");
  adam.step += 1;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
  adam.m = adam.beta1 * adam.m + (1.0 - adam.beta1) * grads;
  adam.v = adam.beta2 * adam.v + (1.0 - adam.beta2) * grads.cwiseProduct(grads);
  params.array() -= adam.lr * (adam.m.array() / bc1) / ((adam.v.array() / bc2).sqrt() + adam.eps);
}

/// Diagonal Gaussian head over an Mlp mean. Log-std is state independent.
struct GaussianPolicyHead {
  Eigen::VectorXd log_std;

  GaussianPolicyHead() = default;
  explicit GaussianPolicyHead(int dim, double init_std = 1.0) {
    log_std = Eigen::VectorXd::Constant(dim, std::log(init_std));
  }

  int dim() const { return static_cast<int>(log_std.size()); }

  Eigen::VectorXd std() const { return log_std.array().exp(); }

  Eigen::VectorXd sample(const Eigen::VectorXd& mean, Rng& rng) const {
    Eigen::VectorXd a(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
      a[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
    return a;
  }

  double log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& action) const {
    double lp = -0.5 * static_cast<double>(mean.size()) * std::log(2.0 * kPi);
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      const double s = std::exp(log_std[i]);
      const double z = (action[i] - mean[i]) / s;
      lp -= 0.5 * z * z + log_std[i];
    }
    return lp;
  }

  double entropy() const {
    return log_std.sum() + 0.5 * dim() * std::log(2.0 * kPi * std::exp(1.0));
  }
};

}  // namespace hexamp
