#pragma once

#include <Eigen/Core>

#include <cmath>

#include "hexamp/math.hpp"
#include "hexamp/sim.hpp"

namespace hexamp {

/// Per-term scales and limits of the reward. Group toggles select the
/// task / style / penalty combinations used by the ablation arms.
struct RewardConfig {
  double lin_scale = 1.0;
  double ang_scale = 0.5;
  double style_scale = 1.0;
  double vz_scale = -1.0;
  double ang_xy_scale = -0.08;
  double torque_scale = -2e-6;
  double joint_acc_scale = -1.5e-7;
  double action_rate_scale = -0.01;
  double collision_scale = -0.05;
  double torque_limit_scale = -0.05;
  double vel_limit_scale = -0.5;
  double contact_force_scale = -0.1;
  double tracking_sigma = 0.15;
  double torque_limit = 40.0;        // N m
  double joint_vel_limit = 12.0;     // rad/s
  double contact_force_limit = 200.0;  // N
  bool enable_task = true;
  bool enable_style = true;
  bool enable_penalty = true;
};

struct RewardBreakdown {
  // task
  double lin = 0, ang = 0;
  // style
  double style = 0;
  // penalty sub-terms (each <= 0)
  double vz = 0, ang_xy = 0, torque = 0, joint_acc = 0, action_rate = 0;
  double collisions = 0, torque_limit = 0, vel_limit = 0, contact_force = 0;
  // group sums
  double r_task = 0, r_style = 0, r_penalty = 0;
};

namespace detail {
inline double overrun_sq(const Eigen::Ref<const Eigen::VectorXd>& v, double limit) {
  double s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double over = std::abs(v[i]) - limit;
    if (over > 0) s += over * over;
  }
  return s;
}
}  // namespace detail

/// Velocity-tracking kernels, yaw-aligned horizontal frame.
inline std::pair<double, double> task_reward(const RobotState& state,
                                             const Eigen::Vector3d& command,
                                             const RewardConfig& cfg) {
  const Eigen::Vector3d rpy = quat_to_rpy(state.base_quat);
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  const double vx = cy * state.base_lin_vel.x() + sy * state.base_lin_vel.y();
  const double vy = -sy * state.base_lin_vel.x() + cy * state.base_lin_vel.y();
  const double lin_err2 = square(vx - command.x()) + square(vy - command.y());
  const Eigen::Vector3d omega_b = state.base_quat.toRotationMatrix().transpose() * state.base_ang_vel;
  const double ang_err2 = square(omega_b.z() - command.z());
  return {cfg.lin_scale * std::exp(-lin_err2 / cfg.tracking_sigma),
          cfg.ang_scale * std::exp(-ang_err2 / cfg.tracking_sigma)};
}

/// Stability/smoothness/safety penalties. Joint acceleration is the finite
/// difference of joint velocities over one control step.
inline RewardBreakdown penalty_reward(const RobotState& state, const Eigen::VectorXd& action,
                                      const Eigen::VectorXd& prev_action,
                                      const JointVector& torques,
                                      const JointVector& prev_joint_vel,
                                      const RewardConfig& cfg) {
  RewardBreakdown b;
  b.vz = cfg.vz_scale * square(state.base_lin_vel.z());
  const Eigen::Vector3d omega_b = state.base_quat.toRotationMatrix().transpose() * state.base_ang_vel;
  b.ang_xy = cfg.ang_xy_scale * (square(omega_b.x()) + square(omega_b.y()));
  b.torque = cfg.torque_scale * torques.squaredNorm();
  const JointVector qdd = (state.joint_vel - prev_joint_vel) / kControlDt;
  b.joint_acc = cfg.joint_acc_scale * qdd.squaredNorm();
  b.action_rate = cfg.action_rate_scale * (action - prev_action).squaredNorm();
  int n_collision = 0;
  for (bool f : state.collision_flags) n_collision += f ? 1 : 0;
  b.collisions = cfg.collision_scale * n_collision;
  b.torque_limit = cfg.torque_limit_scale * detail::overrun_sq(torques, cfg.torque_limit);
  b.vel_limit = cfg.vel_limit_scale * detail::overrun_sq(state.joint_vel, cfg.joint_vel_limit);
  Eigen::VectorXd force_norms(kLegCount);
  for (int leg = 0; leg < kLegCount; ++leg) force_norms[leg] = state.foot_forces.row(leg).norm();
  b.contact_force = cfg.contact_force_scale * detail::overrun_sq(force_norms, cfg.contact_force_limit);
  b.r_penalty = b.vz + b.ang_xy + b.torque + b.joint_acc + b.action_rate + b.collisions +
                b.torque_limit + b.vel_limit + b.contact_force;
  return b;
}

/// Full per-step breakdown. `style_value` is the discriminator-scored style
/// reward in [0, 1] before scaling.
inline RewardBreakdown compute_reward(const RobotState& state, const Eigen::Vector3d& command,
                                      const Eigen::VectorXd& action,
                                      const Eigen::VectorXd& prev_action,
                                      const JointVector& torques,
                                      const JointVector& prev_joint_vel, double style_value,
                                      const RewardConfig& cfg) {
  RewardBreakdown b = penalty_reward(state, action, prev_action, torques, prev_joint_vel, cfg);
  auto [lin, ang] = task_reward(state, command, cfg);
  b.lin = lin;
  b.ang = ang;
  b.r_task = lin + ang;
  b.style = cfg.style_scale * style_value;
  b.r_style = b.style;
  return b;
}

/// Masked sum over the enabled reward groups.
inline double total_reward(const RewardBreakdown& b, const RewardConfig& cfg) {
  double total = 0;
  if (cfg.enable_task) total += b.r_task;
  if (cfg.enable_style) total += b.r_style;
  if (cfg.enable_penalty) total += b.r_penalty;
  return total;
}

}  // namespace hexamp
