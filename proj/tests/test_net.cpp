#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <filesystem>

#include "hexamp/checkpoint.hpp"
#include "hexamp/net.hpp"
#include "test_oracles.hpp"

using namespace hexamp;

namespace {

Mlp random_net(std::vector<int> sizes, std::uint64_t seed) {
  Rng rng(seed);
  Mlp net(std::move(sizes));
  init_mlp(net, rng);
  return net;
}

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

// scalar objective used by the finite-difference checks
double weighted_output(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& coeffs) {
  return (forward(net, x).cwiseProduct(coeffs)).sum();
}

}  // namespace

TEST_CASE("forward of an all-zero net is zero", "[net]") {
  Mlp net({5, 7, 3});
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1, 1);
  REQUIRE(forward(net, x).norm() == 0.0);
}

TEST_CASE("single linear layer with identity weights reproduces the input", "[net]") {
  Mlp net({4, 4});
  net.w[0] = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd x(4);
  x << 0.3, -1.2, 5.0, 0.0;
  REQUIRE((forward(net, x) - x).norm() == 0.0);
}

TEST_CASE("forward matches the straight-line oracle", "[net]") {
  const Mlp net = random_net({6, 16, 12, 4}, 42);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = rng.normal();
    const Eigen::VectorXd got = forward(net, x);
    const std::vector<double> want =
        oracle::mlp_forward(net, std::vector<double>(x.data(), x.data() + x.size()));
    for (int i = 0; i < 4; ++i) REQUIRE(std::abs(got[i] - want[static_cast<std::size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("forward rejects a shape mismatch", "[net]") {
  const Mlp net = random_net({6, 8, 2}, 1);
  REQUIRE_THROWS_AS(forward(net, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("backward gradients match central finite differences", "[net]") {
  Mlp net = random_net({4, 8, 6, 3}, 11);
  Rng rng(12);
  const Eigen::MatrixXd x = random_matrix(4, 3, rng);
  const Eigen::MatrixXd coeffs = random_matrix(3, 3, rng);

  MlpCache cache;
  forward_cached(net, x, cache);
  net.zero_grad();
  const Eigen::MatrixXd input_grad = backward(net, cache, coeffs);

  const double h = 1e-6;
  double max_rel = 0.0;
  for (int l = 0; l < net.num_layers(); ++l) {
    for (int j = 0; j < net.w[l].cols(); ++j)
      for (int i = 0; i < net.w[l].rows(); ++i) {
        const double keep = net.w[l](i, j);
        net.w[l](i, j) = keep + h;
        const double up = weighted_output(net, x, coeffs);
        net.w[l](i, j) = keep - h;
        const double dn = weighted_output(net, x, coeffs);
        net.w[l](i, j) = keep;
        max_rel = std::max(max_rel, oracle::rel_err((up - dn) / (2 * h), net.gw[l](i, j)));
      }
    for (int i = 0; i < net.b[l].size(); ++i) {
      const double keep = net.b[l][i];
      net.b[l][i] = keep + h;
      const double up = weighted_output(net, x, coeffs);
      net.b[l][i] = keep - h;
      const double dn = weighted_output(net, x, coeffs);
      net.b[l][i] = keep;
      max_rel = std::max(max_rel, oracle::rel_err((up - dn) / (2 * h), net.gb[l][i]));
    }
  }
  REQUIRE(max_rel < 1e-5);

  // input gradient against finite differences
  Eigen::MatrixXd xm = x;
  for (int c = 0; c < xm.cols(); ++c)
    for (int r = 0; r < xm.rows(); ++r) {
      const double keep = xm(r, c);
      xm(r, c) = keep + h;
      const double up = weighted_output(net, xm, coeffs);
      xm(r, c) = keep - h;
      const double dn = weighted_output(net, xm, coeffs);
      xm(r, c) = keep;
      max_rel = std::max(max_rel, oracle::rel_err((up - dn) / (2 * h), input_grad(r, c)));
    }
  REQUIRE(max_rel < 1e-5);
}

TEST_CASE("linear single-layer input gradient is W^T times the output gradient", "[net]") {
  Mlp net = random_net({5, 3}, 3);
  Rng rng(4);
  const Eigen::MatrixXd x = random_matrix(5, 2, rng);
  const Eigen::MatrixXd g = random_matrix(3, 2, rng);
  MlpCache cache;
  forward_cached(net, x, cache);
  const Eigen::MatrixXd input_grad = backward(net, cache, g);
  REQUIRE((input_grad - net.w[0].transpose() * g).norm() == 0.0);
}

TEST_CASE("zero output gradient produces zero parameter gradients", "[net]") {
  Mlp net = random_net({4, 6, 2}, 5);
  MlpCache cache;
  Rng rng(6);
  forward_cached(net, random_matrix(4, 3, rng), cache);
  net.zero_grad();
  backward(net, cache, Eigen::MatrixXd::Zero(2, 3));
  for (const auto& gw : net.gw) REQUIRE(gw.norm() == 0.0);
  for (const auto& gb : net.gb) REQUIRE(gb.norm() == 0.0);
}

TEST_CASE("backward without a cache faults", "[net]") {
  Mlp net = random_net({4, 6, 2}, 5);
  MlpCache cache;
  REQUIRE_THROWS_AS(backward(net, cache, Eigen::MatrixXd::Zero(2, 1)), std::logic_error);
}

TEST_CASE("adam with zero gradients leaves parameters unchanged", "[net]") {
  Mlp net = random_net({3, 5, 2}, 9);
  AdamState adam(net, 1e-3);
  const Eigen::MatrixXd w0 = net.w[0];
  net.zero_grad();
  adam_step(net, adam);
  REQUIRE(adam.step == 1);
  REQUIRE((net.w[0] - w0).norm() == 0.0);
}

TEST_CASE("adam asymptotic step size equals the learning rate", "[net]") {
  // constant gradient: the bias-corrected update approaches lr * sign(g)
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 0.37);
  AdamVecState adam(1, 1e-3);
  double prev = p[0];
  double last_step = 0;
  for (int i = 0; i < 2000; ++i) {
    adam_step(p, g, adam);
    last_step = std::abs(p[0] - prev);
    prev = p[0];
  }
  REQUIRE(last_step == Catch::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("adam is deterministic", "[net]") {
  auto run = [] {
    Mlp net = random_net({4, 8, 2}, 21);
    AdamState adam(net, 1e-3);
    Rng rng(22);
    for (int i = 0; i < 50; ++i) {
      MlpCache cache;
      const Eigen::MatrixXd x = random_matrix(4, 5, rng);
      forward_cached(net, x, cache);
      net.zero_grad();
      backward(net, cache, Eigen::MatrixXd::Ones(2, 5));
      adam_step(net, adam);
    }
    return net;
  };
  const Mlp a = run();
  const Mlp b = run();
  for (int l = 0; l < a.num_layers(); ++l) REQUIRE((a.w[l] - b.w[l]).norm() == 0.0);
}

TEST_CASE("adam faults on non-finite gradients before mutating", "[net]") {
  Mlp net = random_net({3, 2}, 30);
  AdamState adam(net, 1e-3);
  const Eigen::MatrixXd w0 = net.w[0];
  net.gw[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(adam_step(net, adam), std::runtime_error);
  REQUIRE((net.w[0] - w0).norm() == 0.0);
  REQUIRE(adam.step == 0);
}

TEST_CASE("gaussian head log density at the mean", "[net]") {
  GaussianPolicyHead head(18, 1.0);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(18, 0.2);
  const double lp = head.log_prob(mean, mean);
  REQUIRE(lp == Catch::Approx(-0.5 * 18 * std::log(2 * kPi)).margin(1e-12));
}

TEST_CASE("gaussian head log density decreases away from the mean", "[net]") {
  GaussianPolicyHead head(18, 0.7);
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(18);
  double prev = head.log_prob(mean, mean);
  for (double r = 0.1; r < 2.0; r += 0.1) {
    const double lp = head.log_prob(mean, Eigen::VectorXd::Constant(18, r));
    REQUIRE(lp < prev);
    prev = lp;
  }
}

TEST_CASE("elu forward is continuous in the input", "[net]") {
  const Mlp net = random_net({5, 12, 8, 3}, 44);
  Rng rng(45);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = rng.normal();
    const Eigen::VectorXd y = forward(net, x);
    double delta = 1e-3;
    double prev_diff = std::numeric_limits<double>::max();
    for (int k = 0; k < 6; ++k) {
      Eigen::VectorXd xd = x;
      xd[trial % 5] += delta;
      const double diff = (forward(net, xd) - y).norm();
      REQUIRE(diff < prev_diff + 1e-15);
      prev_diff = diff;
      delta /= 4.0;
    }
    REQUIRE(prev_diff < 1e-5);
  }
}

TEST_CASE("mlp serialization round-trip is bit exact", "[net]") {
  const Mlp net = random_net({7, 9, 4}, 77);
  TensorStore store;
  pack_mlp(store, "n", net);
  const std::string path = (std::filesystem::temp_directory_path() / "hexamp_net_rt.hamp").string();
  save_tensor_store(store, path);
  const TensorStore loaded = load_tensor_store(path);
  const Mlp back = unpack_mlp(loaded, "n");
  for (int l = 0; l < net.num_layers(); ++l) {
    REQUIRE(back.w[l] == net.w[l]);
    REQUIRE(back.b[l] == net.b[l]);
  }
  std::remove(path.c_str());
}

TEST_CASE("gradient-penalty value and parameter gradients check out", "[net]") {
  Mlp net = random_net({6, 10, 8, 1}, 90);
  Rng rng(91);
  const Eigen::MatrixXd x = random_matrix(6, 4, rng);

  net.zero_grad();
  const double penalty = gradient_penalty_backward(net, x, 1.0);

  // value: mean squared input-gradient norm via the (independently checked)
  // reverse pass
  MlpCache cache;
  forward_cached(net, x, cache);
  const Eigen::MatrixXd g = input_gradient(net, cache, Eigen::MatrixXd::Ones(1, 4));
  REQUIRE(penalty == Catch::Approx(g.squaredNorm() / 4.0).epsilon(1e-12));

  // parameter gradients via finite differences of the penalty value
  const double h = 1e-6;
  auto penalty_at = [&]() {
    MlpCache c;
    forward_cached(net, x, c);
    return input_gradient(net, c, Eigen::MatrixXd::Ones(1, 4)).squaredNorm() / 4.0;
  };
  double max_rel = 0.0;
  Rng pick(92);
  for (int l = 0; l < net.num_layers(); ++l) {
    for (int rep = 0; rep < 40; ++rep) {
      const int i = pick.uniform_int(static_cast<int>(net.w[l].rows()));
      const int j = pick.uniform_int(static_cast<int>(net.w[l].cols()));
      const double keep = net.w[l](i, j);
      net.w[l](i, j) = keep + h;
      const double up = penalty_at();
      net.w[l](i, j) = keep - h;
      const double dn = penalty_at();
      net.w[l](i, j) = keep;
      max_rel = std::max(max_rel, oracle::rel_err((up - dn) / (2 * h), net.gw[l](i, j)));
    }
    for (int i = 0; i < net.b[l].size(); ++i) {
      const double keep = net.b[l][i];
      net.b[l][i] = keep + h;
      const double up = penalty_at();
      net.b[l][i] = keep - h;
      const double dn = penalty_at();
      net.b[l][i] = keep;
      max_rel = std::max(max_rel, oracle::rel_err((up - dn) / (2 * h), net.gb[l][i]));
    }
  }
  REQUIRE(max_rel < 1e-4);
}
