#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>

#include "hexamp/amp.hpp"
#include "test_oracles.hpp"

using namespace hexamp;

namespace {

PriorDataset small_dataset() {
  return build_dataset(default_model(), GaitParams{}, {{0.3, 0, 0}, {0, 0.2, 0}}, 1.0);
}

// a discriminator that computes D(x) = x[0] by keeping one hidden path in
// the linear ELU regime
Discriminator passthrough_disc(double alpha_gp) {
  Rng rng(1);
  Discriminator d(rng, 1e-3, alpha_gp);
  for (auto& w : d.net.w) w.setZero();
  for (auto& b : d.net.b) b.setZero();
  d.net.w[0](0, 0) = 1.0;
  d.net.b[0][0] = 10.0;  // stay in the x > 0 branch
  d.net.w[1](0, 0) = 1.0;
  d.net.w[2](0, 0) = 1.0;
  d.net.b[2][0] = -10.0;
  return d;
}

TransitionBatch batch_with_x0(double x0, int n, TransitionBatch::Source src) {
  TransitionBatch b;
  b.pairs.setZero(kTransitionDim, n);
  b.pairs.row(0).setConstant(x0);
  b.source = src;
  b.normalized = true;
  return b;
}

}  // namespace

TEST_CASE("style reward fixed points and clamping", "[amp]") {
  REQUIRE(style_reward(1.0) == 1.0);
  REQUIRE(style_reward(-1.0) == 0.0);
  REQUIRE(style_reward(0.0) == 0.75);
  REQUIRE(style_reward(5.0) == 0.0);
}

TEST_CASE("style reward stays in [0,1] and is symmetric about 1", "[amp]") {
  for (double d = -10.0; d <= 10.0; d += 0.01) {
    const double r = style_reward(d);
    REQUIRE(r >= 0.0);
    REQUIRE(r <= 1.0);
    REQUIRE(std::abs(r - style_reward(2.0 - d)) < 1e-12);
    if (std::abs(d - 1.0) > 1e-9) REQUIRE(r < 1.0);
  }
}

TEST_CASE("discriminator loss of an all-zero net is 1 + 1", "[amp]") {
  Rng rng(2);
  Discriminator d(rng, 1e-3, 10.0);
  for (auto& w : d.net.w) w.setZero();
  for (auto& b : d.net.b) b.setZero();
  const auto real = batch_with_x0(0.5, 8, TransitionBatch::Source::prior);
  const auto fake = batch_with_x0(-0.5, 8, TransitionBatch::Source::policy);
  const DiscriminatorLossParts parts = discriminator_loss(d, real, fake);
  REQUIRE(parts.real == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(parts.fake == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(parts.penalty == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(parts.total() == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("perfect separation with unit input gradient", "[amp]") {
  // D(real) = 1, D(fake) = -1; the lone input gradient has norm 1, so the
  // penalty term is exactly alpha_gp / 2
  Discriminator d = passthrough_disc(10.0);
  const auto real = batch_with_x0(1.0, 4, TransitionBatch::Source::prior);
  const auto fake = batch_with_x0(-1.0, 4, TransitionBatch::Source::policy);
  const DiscriminatorLossParts parts = discriminator_loss(d, real, fake);
  REQUIRE(parts.real == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(parts.fake == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(parts.penalty == Catch::Approx(5.0).margin(1e-9));

  Discriminator no_gp = passthrough_disc(0.0);
  REQUIRE(discriminator_loss(no_gp, real, fake).total() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("loss components are individually non-negative", "[amp]") {
  Rng rng(3);
  Discriminator d(rng, 1e-3, 10.0);
  TransitionBatch real, fake;
  real.pairs.setZero(kTransitionDim, 16);
  fake.pairs.setZero(kTransitionDim, 16);
  for (int c = 0; c < 16; ++c)
    for (int r = 0; r < kTransitionDim; ++r) {
      real.pairs(r, c) = rng.normal();
      fake.pairs(r, c) = rng.normal();
    }
  real.normalized = fake.normalized = true;
  const DiscriminatorLossParts parts = discriminator_loss(d, real, fake);
  REQUIRE(parts.real >= 0.0);
  REQUIRE(parts.fake >= 0.0);
  REQUIRE(parts.penalty >= 0.0);
}

TEST_CASE("unnormalized batches are rejected", "[amp]") {
  Rng rng(4);
  Discriminator d(rng, 1e-3, 10.0);
  TransitionBatch raw;
  raw.pairs.setZero(kTransitionDim, 4);
  TransitionBatch ok = raw;
  ok.normalized = true;
  REQUIRE_THROWS_AS(discriminator_loss(d, raw, ok), std::invalid_argument);
  REQUIRE_THROWS_AS(discriminator_loss(d, ok, raw), std::invalid_argument);
  REQUIRE_THROWS_AS(d.score(raw), std::invalid_argument);
}

TEST_CASE("normalization is idempotent", "[amp]") {
  const PriorDataset ds = small_dataset();
  Rng rng(5);
  TransitionBatch b;
  b.pairs.setZero(kTransitionDim, 8);
  for (int c = 0; c < 8; ++c)
    for (int r = 0; r < kTransitionDim; ++r) b.pairs(r, c) = rng.normal();
  normalize_batch(b, ds.mean, ds.std);
  const Eigen::MatrixXd once = b.pairs;
  normalize_batch(b, ds.mean, ds.std);
  REQUIRE(b.pairs == once);
}

TEST_CASE("gradient penalty matches finite-difference input gradients", "[amp]") {
  Rng rng(6);
  Discriminator d(rng, 1e-3, 10.0);
  TransitionBatch real, fake;
  real.pairs.setZero(kTransitionDim, 3);
  fake.pairs.setZero(kTransitionDim, 3);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < kTransitionDim; ++r) {
      real.pairs(r, c) = 0.5 * rng.normal();
      fake.pairs(r, c) = 0.5 * rng.normal();
    }
  real.normalized = fake.normalized = true;
  const DiscriminatorLossParts parts = discriminator_loss(d, real, fake);

  const double h = 1e-6;
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < kTransitionDim; ++r) {
      Eigen::MatrixXd up = real.pairs, dn = real.pairs;
      up(r, c) += h;
      dn(r, c) -= h;
      const double fd =
          (forward(d.net, Eigen::MatrixXd(up.col(c)))(0, 0) -
           forward(d.net, Eigen::MatrixXd(dn.col(c)))(0, 0)) /
          (2 * h);
      acc += fd * fd;
    }
  }
  const double fd_penalty = d.alpha_gp / 2.0 * acc / 3.0;
  REQUIRE(oracle::rel_err(fd_penalty, parts.penalty) < 1e-4);
}

TEST_CASE("update metrics have one entry per step", "[amp]") {
  const PriorDataset ds = small_dataset();
  Rng rng(7);
  Discriminator d(rng, 1e-3, 10.0);
  d.set_normalizer(ds);
  TransitionBatch policy;
  policy.pairs.setZero(kTransitionDim, 40);
  for (int c = 0; c < 40; ++c)
    for (int r = 0; r < kTransitionDim; ++r) policy.pairs(r, c) = rng.normal();
  policy.normalized = true;
  Rng update_rng(8);
  const DiscriminatorMetrics m = update_discriminator(d, ds, policy, 3, 16, update_rng);
  REQUIRE(m.loss.size() == 3);
  REQUIRE(m.real_mean.size() == 3);
  REQUIRE(m.fake_mean.size() == 3);

  TransitionBatch empty;
  empty.pairs.setZero(kTransitionDim, 0);
  empty.normalized = true;
  REQUIRE_THROWS_AS(update_discriminator(d, ds, empty, 1, 16, update_rng), std::invalid_argument);
}

TEST_CASE("separable synthetic distributions are quickly told apart", "[amp]") {
  Rng rng(9);
  Discriminator d(rng, 1e-3, 10.0);
  Rng data_rng(10);
  Eigen::VectorXd offset(kTransitionDim);
  for (int i = 0; i < kTransitionDim; ++i) offset[i] = data_rng.normal();
  offset *= 4.0 / offset.norm() * std::sqrt(static_cast<double>(kTransitionDim));

  auto sample = [&](double sign) {
    Eigen::MatrixXd m(kTransitionDim, 64);
    for (int c = 0; c < 64; ++c)
      for (int r = 0; r < kTransitionDim; ++r)
        m(r, c) = data_rng.normal() + sign * 0.5 * offset[r];
    return m;
  };

  DiscriminatorLossParts last;
  for (int s = 0; s < 150; ++s) last = discriminator_update(d, sample(+1.0), sample(-1.0));
  REQUIRE(last.real_score_mean > 0.5);
  REQUIRE(last.fake_score_mean < -0.5);
}
