#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>

#include "hexamp/rewards.hpp"

using namespace hexamp;

namespace {

RobotState still_state() {
  RobotState s;
  s.base_pos = {0, 0, 0.30};
  return s;
}

}  // namespace

TEST_CASE("task reward at perfect tracking", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.base_lin_vel = {0.4, -0.2, 0.0};
  s.base_ang_vel = {0.0, 0.0, 0.3};
  const auto [lin, ang] = task_reward(s, {0.4, -0.2, 0.3}, cfg);
  REQUIRE(lin == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(ang == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("task reward at one sigma of squared error", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.base_lin_vel = {std::sqrt(0.15), 0.0, 0.0};
  const auto [lin, ang] = task_reward(s, {0.0, 0.0, 0.0}, cfg);
  REQUIRE(lin == Catch::Approx(std::exp(-1.0)).margin(1e-12));
  REQUIRE(ang == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("task reward vanishes for huge errors", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.base_lin_vel = {50.0, 0.0, 0.0};
  s.base_ang_vel = {0.0, 0.0, -40.0};
  const auto [lin, ang] = task_reward(s, {-50.0, 0.0, 40.0}, cfg);
  REQUIRE(lin < 1e-12);
  REQUIRE(ang < 1e-12);
}

TEST_CASE("static standing penalty is only the torque term", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(18);
  JointVector tau = JointVector::Constant(3.0);
  const RewardBreakdown b = penalty_reward(s, a, a, tau, JointVector::Zero(), cfg);
  REQUIRE(b.torque == Catch::Approx(-2e-6 * 18 * 9.0).margin(1e-15));
  REQUIRE(b.r_penalty == Catch::Approx(b.torque).margin(1e-15));
  REQUIRE(b.torque_limit == 0.0);
  REQUIRE(b.vel_limit == 0.0);
  REQUIRE(b.contact_force == 0.0);
}

TEST_CASE("one collision contributes exactly -0.05", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.collision_flags[4] = true;
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(18);
  const RewardBreakdown b = penalty_reward(s, a, a, JointVector::Zero(), JointVector::Zero(), cfg);
  REQUIRE(b.collisions == Catch::Approx(-0.05).margin(1e-15));
}

TEST_CASE("full breakdown matches a hand-computed fixture", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.base_lin_vel = {0.1, -0.2, 0.3};
  s.base_ang_vel = {0.05, -0.1, 0.15};
  s.joint_vel.setConstant(0.5);
  s.collision_flags[0] = s.collision_flags[7] = true;
  s.foot_forces.row(2) = Eigen::RowVector3d(0.0, 0.0, 250.0);
  const Eigen::VectorXd action = Eigen::VectorXd::Constant(18, 0.1);
  const Eigen::VectorXd prev_action = Eigen::VectorXd::Constant(18, -0.1);
  const JointVector tau = JointVector::Constant(2.0);
  const Eigen::Vector3d cmd(0.3, 0.1, 0.2);

  const RewardBreakdown b =
      compute_reward(s, cmd, action, prev_action, tau, JointVector::Zero(), 0.6, cfg);

  const double lin = std::exp(-(0.04 + 0.09) / 0.15);
  const double ang = 0.5 * std::exp(-0.0025 / 0.15);
  REQUIRE(b.lin == Catch::Approx(lin).margin(1e-9));
  REQUIRE(b.ang == Catch::Approx(ang).margin(1e-9));
  REQUIRE(b.style == Catch::Approx(0.6).margin(1e-12));
  REQUIRE(b.vz == Catch::Approx(-0.09).margin(1e-12));
  REQUIRE(b.ang_xy == Catch::Approx(-0.08 * 0.0125).margin(1e-12));
  REQUIRE(b.torque == Catch::Approx(-2e-6 * 72.0).margin(1e-15));
  // qdd = 0.5 / 0.02 = 25 on every joint
  REQUIRE(b.joint_acc == Catch::Approx(-1.5e-7 * 18 * 625.0).margin(1e-12));
  REQUIRE(b.action_rate == Catch::Approx(-0.01 * 18 * 0.04).margin(1e-12));
  REQUIRE(b.collisions == Catch::Approx(-0.10).margin(1e-12));
  REQUIRE(b.torque_limit == 0.0);
  REQUIRE(b.vel_limit == 0.0);
  REQUIRE(b.contact_force == Catch::Approx(-0.1 * 2500.0).margin(1e-9));

  const double expect_total = lin + ang + 0.6 +
                              (-0.09 - 0.001 - 0.000144 - 0.00168750 - 0.0072 - 0.10 - 250.0);
  REQUIRE(total_reward(b, cfg) == Catch::Approx(expect_total).margin(1e-9));
}

TEST_CASE("limit overruns activate only beyond the threshold", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.joint_vel[3] = 13.0;  // 1 rad/s over
  JointVector tau = JointVector::Zero();
  tau[5] = 43.0;  // 3 N m over
  const Eigen::VectorXd a = Eigen::VectorXd::Zero(18);
  const RewardBreakdown b = penalty_reward(s, a, a, tau, JointVector::Zero(), cfg);
  REQUIRE(b.vel_limit == Catch::Approx(-0.5 * 1.0).margin(1e-12));
  REQUIRE(b.torque_limit == Catch::Approx(-0.05 * 9.0).margin(1e-12));
}

TEST_CASE("group masks select the ablation arms additively", "[rewards]") {
  RewardConfig cfg;
  RobotState s = still_state();
  s.base_lin_vel = {0.2, 0.0, 0.1};
  s.collision_flags[1] = true;
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(18, 0.05);
  const RewardBreakdown b = compute_reward(s, {0.3, 0.0, 0.0}, a, Eigen::VectorXd::Zero(18),
                                           JointVector::Constant(1.0), JointVector::Zero(), 0.8, cfg);

  RewardConfig task_only = cfg;
  task_only.enable_style = task_only.enable_penalty = false;
  REQUIRE(total_reward(b, task_only) == Catch::Approx(b.lin + b.ang).margin(1e-12));

  RewardConfig no_style = cfg;
  no_style.enable_style = false;
  REQUIRE(total_reward(b, cfg) - total_reward(b, no_style) == Catch::Approx(b.r_style).margin(1e-12));

  RewardConfig no_penalty = cfg;
  no_penalty.enable_penalty = false;
  REQUIRE(total_reward(b, cfg) - total_reward(b, no_penalty) ==
          Catch::Approx(b.r_penalty).margin(1e-12));
  REQUIRE(total_reward(b, cfg) == Catch::Approx(b.r_task + b.r_style + b.r_penalty).margin(1e-12));
}

TEST_CASE("reward term signs on random states", "[rewards]") {
  RewardConfig cfg;
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    RobotState s = still_state();
    for (int i = 0; i < 3; ++i) {
      s.base_lin_vel[i] = rng.normal();
      s.base_ang_vel[i] = rng.normal();
    }
    for (int i = 0; i < 18; ++i) s.joint_vel[i] = 5.0 * rng.normal();
    Eigen::VectorXd a(18), ap(18);
    JointVector tau, pqd;
    for (int i = 0; i < 18; ++i) {
      a[i] = rng.normal();
      ap[i] = rng.normal();
      tau[i] = 30.0 * rng.normal();
      pqd[i] = 5.0 * rng.normal();
    }
    const double style = style_reward(rng.normal() * 3.0);
    const Eigen::Vector3d cmd(rng.uniform(-1, 1), rng.uniform(-0.5, 0.5), rng.uniform(-1, 1));
    const RewardBreakdown b = compute_reward(s, cmd, a, ap, tau, pqd, style, cfg);
    REQUIRE(b.r_style >= 0.0);
    REQUIRE(b.r_style <= cfg.style_scale);
    REQUIRE(b.lin > 0.0);
    REQUIRE(b.lin <= cfg.lin_scale);
    REQUIRE(b.ang > 0.0);
    REQUIRE(b.ang <= cfg.ang_scale);
    for (double term : {b.vz, b.ang_xy, b.torque, b.joint_acc, b.action_rate, b.collisions,
                        b.torque_limit, b.vel_limit, b.contact_force})
      REQUIRE(term <= 0.0);
  }
}

TEST_CASE("reward is invariant under a world yaw rotation", "[rewards]") {
  RewardConfig cfg;
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    RobotState s = still_state();
    s.base_quat = yaw_quat(rng.uniform(-1, 1));
    for (int i = 0; i < 3; ++i) {
      s.base_lin_vel[i] = rng.normal();
      s.base_ang_vel[i] = rng.normal();
    }
    for (int i = 0; i < 18; ++i) s.joint_vel[i] = rng.normal();
    for (int leg = 0; leg < kLegCount; ++leg)
      s.foot_forces.row(leg) = 100.0 * Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal());
    s.collision_flags[2] = true;

    const double psi = rng.uniform(-3, 3);
    const Eigen::Matrix3d rz = yaw_quat(psi).toRotationMatrix();
    RobotState r = s;
    r.base_quat = yaw_quat(psi) * s.base_quat;
    r.base_lin_vel = rz * s.base_lin_vel;
    r.base_ang_vel = rz * s.base_ang_vel;
    for (int leg = 0; leg < kLegCount; ++leg)
      r.foot_forces.row(leg) = (rz * s.foot_forces.row(leg).transpose()).transpose();

    Eigen::VectorXd a(18), ap(18);
    JointVector tau, pqd;
    for (int i = 0; i < 18; ++i) {
      a[i] = rng.normal();
      ap[i] = rng.normal();
      tau[i] = rng.normal();
      pqd[i] = rng.normal();
    }
    const Eigen::Vector3d cmd(0.3, -0.2, 0.4);
    const RewardBreakdown ba = compute_reward(s, cmd, a, ap, tau, pqd, 0.5, cfg);
    const RewardBreakdown bb = compute_reward(r, cmd, a, ap, tau, pqd, 0.5, cfg);
    REQUIRE(total_reward(ba, cfg) == Catch::Approx(total_reward(bb, cfg)).margin(1e-9));
    REQUIRE(ba.lin == Catch::Approx(bb.lin).margin(1e-9));
    REQUIRE(ba.vz == Catch::Approx(bb.vz).margin(1e-9));
  }
}
