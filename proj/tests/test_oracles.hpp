#pragma once

// Test-only oracles, kept independent of the library's compute paths:
// straight-line MLP forward, central finite differences, brute-force
// discounted sums, and a Kolmogorov-Smirnov uniformity test.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <vector>

#include "hexamp/net.hpp"

namespace oracle {

// plain-loop forward pass, no shared code with hexamp::forward
inline std::vector<double> mlp_forward(const hexamp::Mlp& net, const std::vector<double>& input) {
  std::vector<double> h = input;
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.w[l];
    const auto& b = net.b[l];
    std::vector<double> out(static_cast<std::size_t>(w.rows()));
    for (int i = 0; i < w.rows(); ++i) {
      double acc = b[i];
      for (int j = 0; j < w.cols(); ++j) acc += w(i, j) * h[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = acc;
    }
    if (l + 1 < net.num_layers())
      for (double& v : out) v = v > 0.0 ? v : std::exp(v) - 1.0;
    h = std::move(out);
  }
  return h;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// relative error with a small floor so exact-zero gradients compare by
// absolute size instead of amplifying finite-difference noise
inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-4});
  return std::abs(a - b) / denom;
}

// brute-force GAE from the definition: the forward nested discounted sum
// of TD residuals, truncated at episode ends
inline Eigen::VectorXd gae_bruteforce(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                                      const Eigen::VectorXd& dones, double bootstrap, double gamma,
                                      double lam) {
  const int n = static_cast<int>(rewards.size());
  Eigen::VectorXd adv(n);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (int l = t; l < n; ++l) {
      const double vnext = (l + 1 < n) ? values[l + 1] : bootstrap;
      const double nonterminal = 1.0 - dones[l];
      const double delta = rewards[l] + gamma * vnext * nonterminal - values[l];
      acc += w * delta;
      if (dones[l] > 0.5) break;
      w *= gamma * lam;
    }
    adv[t] = acc;
  }
  return adv;
}

// Kolmogorov-Smirnov test against U[lo, hi]; returns the asymptotic p-value
inline double ks_uniform_pvalue(std::vector<double> samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = (samples[i] - lo) / (hi - lo);
    const double lo_emp = static_cast<double>(i) / n;
    const double hi_emp = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(cdf - lo_emp), std::abs(cdf - hi_emp)});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace oracle
