#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hexamp/math.hpp"
#include "hexamp/robot.hpp"
#include "hexamp/terrain.hpp"

namespace hexamp {

inline constexpr double kPhysicsDt = 0.005;        // 200 Hz
inline constexpr int kSubsteps = 4;                // per 50 Hz control step
inline constexpr double kControlDt = kPhysicsDt * kSubsteps;
inline constexpr double kContactStiffness = 5000.0;  // N/m
inline constexpr double kContactDamping = 100.0;     // N s/m
inline constexpr double kTangentialGain = 1000.0;    // N s/m, capped by the cone
inline constexpr double kActionScale = 0.25;          // rad per unit action
inline constexpr double kActionClip = 1.5;
inline constexpr double kNominalKp1 = 100.0;
inline constexpr double kNominalKp2 = 2.0;

using JointVector = Eigen::Matrix<double, kJointCount, 1>;

struct SimFault : std::runtime_error {
  explicit SimFault(const std::string& what) : std::runtime_error(what) {}
};

/// Full simulator truth for one robot.
struct RobotState {
  Eigen::Vector3d base_pos = Eigen::Vector3d::Zero();
  Eigen::Quaterniond base_quat = Eigen::Quaterniond::Identity();
  Eigen::Vector3d base_lin_vel = Eigen::Vector3d::Zero();
  Eigen::Vector3d base_ang_vel = Eigen::Vector3d::Zero();  // world frame
  JointVector joint_pos = JointVector::Zero();
  JointVector joint_vel = JointVector::Zero();
  Eigen::Matrix<double, kLegCount, 3> foot_forces = Eigen::Matrix<double, kLegCount, 3>::Zero();
  std::array<bool, kLegCount> contact_flags{};
  std::array<bool, 13> collision_flags{};  // trunk, 6 thighs, 6 shanks
  double time = 0.0;
};

struct RandomizationSample {
  double stiffness_scale = 1.0;
  double damping_scale = 1.0;
  double joint_pos_scale = 1.0;
  double link_mass_scale = 1.0;
  double payload_mass = 0.0;  // kg
  Eigen::Vector3d payload_offset = Eigen::Vector3d::Zero();
  double foot_friction = 1.0;
  double motor_strength_scale = 1.0;
};

/// Uniform draws inside the randomization intervals.
inline RandomizationSample sample_randomization(Rng& rng) {
  RandomizationSample r;
  r.stiffness_scale = rng.uniform(0.8, 1.2);
  r.damping_scale = rng.uniform(0.8, 1.2);
  r.joint_pos_scale = rng.uniform(0.6, 1.4);
  r.link_mass_scale = rng.uniform(0.9, 1.1);
  r.payload_mass = rng.uniform(0.0, 5.0);
  for (int i = 0; i < 3; ++i) r.payload_offset[i] = rng.uniform(-0.15, 0.15);
  r.foot_friction = rng.uniform(0.1, 2.5);
  r.motor_strength_scale = rng.uniform(0.8, 1.2);
  return r;
}

inline RandomizationSample nominal_randomization(double friction = 1.0) {
  RandomizationSample r;
  r.foot_friction = friction;
  return r;
}

/// Cascaded position-velocity torque law: tau = kp2 * (kp1 * (qd - q) - qdot)
inline JointVector csp_torque(const JointVector& q_d, const JointVector& q,
                              const JointVector& qdot, double kp1, double kp2) {
  if (kp1 <= 0.0 || kp2 <= 0.0) throw std::invalid_argument("csp_torque: gains must be > 0");
  return kp2 * (kp1 * (q_d - q) - qdot);
}

/// Desired joint positions from a policy action.
inline JointVector action_to_target(const Eigen::VectorXd& action, const JointVector& q0) {
  if (action.size() != kJointCount) throw std::invalid_argument("action_to_target: need 18 dims");
  JointVector q_d;
  for (int i = 0; i < kJointCount; ++i)
    q_d[i] = q0[i] + kActionScale * clamp(action[i], -kActionClip, kActionClip);
  return q_d;
}

struct StepOptions {
  bool gravity = true;
  bool contacts = true;
};

namespace detail {

inline void check_finite(const RobotState& s) {
  if (!s.base_pos.allFinite()) throw SimFault("non-finite state field: base_pos");
  if (!s.base_quat.coeffs().allFinite()) throw SimFault("non-finite state field: base_quat");
  if (!s.base_lin_vel.allFinite()) throw SimFault("non-finite state field: base_lin_vel");
  if (!s.base_ang_vel.allFinite()) throw SimFault("non-finite state field: base_ang_vel");
  if (!s.joint_pos.allFinite()) throw SimFault("non-finite state field: joint_pos");
  if (!s.joint_vel.allFinite()) throw SimFault("non-finite state field: joint_vel");
  if (!s.foot_forces.allFinite()) throw SimFault("non-finite state field: foot_forces");
}

}  // namespace detail

/// One 200 Hz physics substep: per-joint servo integration, spring-damper
/// contacts with a Coulomb cone, floating-base semi-implicit Euler.
inline RobotState step(const RobotState& state, const JointVector& torques,
                       const Terrain& terrain, const RandomizationSample& rand,
                       const RobotModel& model, double dt = kPhysicsDt,
                       const StepOptions& opts = {}) {
  if (!torques.allFinite()) throw SimFault("non-finite torques");
  RobotState s = state;

  // joints: torque-limited second-order servo
  const double tau_max = model.joint_torque_limit * rand.motor_strength_scale;
  const double vel_cap = 2.0 * model.joint_velocity_limit;
  for (int i = 0; i < kJointCount; ++i) {
    const double tau = clamp(torques[i], -tau_max, tau_max);
    s.joint_vel[i] += tau / model.joint_inertia * dt;
    s.joint_vel[i] = clamp(s.joint_vel[i], -vel_cap, vel_cap);
    s.joint_pos[i] += s.joint_vel[i] * dt;
  }

  const Eigen::Matrix3d rot = s.base_quat.toRotationMatrix();
  const double mass = model.base_mass * rand.link_mass_scale + rand.payload_mass;
  const double mu = terrain.friction * rand.foot_friction;

  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // about base origin, world
  if (opts.gravity) {
    force.z() -= mass * kGravity;
    const Eigen::Vector3d payload_arm = rot * rand.payload_offset;
    torque += payload_arm.cross(Eigen::Vector3d(0, 0, -rand.payload_mass * kGravity));
  }

  // foot contacts
  for (int leg = 0; leg < kLegCount; ++leg) {
    Eigen::Vector3d q = s.joint_pos.segment<3>(leg * 3);
    const Eigen::Vector3d foot_b = foot_position(model, leg, q);
    const Eigen::Vector3d foot_w = s.base_pos + rot * foot_b;
    const Eigen::Vector3d foot_vel = s.base_lin_vel + s.base_ang_vel.cross(rot * foot_b) +
                                     rot * (leg_jacobian(model, leg, q) * s.joint_vel.segment<3>(leg * 3));
    Eigen::Vector3d f = Eigen::Vector3d::Zero();
    bool contact = false;
    if (opts.contacts) {
      const double depth = terrain.height(foot_w.x(), foot_w.y()) - foot_w.z();
      if (depth > 0.0) {
        const double fn = std::max(0.0, kContactStiffness * depth - kContactDamping * foot_vel.z());
        if (fn > 0.0) {
          contact = true;
          const Eigen::Vector3d vt(foot_vel.x(), foot_vel.y(), 0.0);
          const double vt_norm = vt.norm();
          Eigen::Vector3d ft = Eigen::Vector3d::Zero();
          if (vt_norm > 1e-9)
            ft = -std::min(kTangentialGain * vt_norm, mu * fn) * vt / vt_norm;
          f = ft + Eigen::Vector3d(0, 0, fn);
          force += f;
          torque += (foot_w - s.base_pos).cross(f);
        }
      }
    }
    s.foot_forces.row(leg) = f.transpose();
    s.contact_flags[leg] = contact;
  }

  // base linear
  s.base_lin_vel += force / mass * dt;
  // base angular, Euler's equation in the body frame
  const Eigen::Vector3d inertia = model.base_inertia * rand.link_mass_scale;
  const Eigen::Vector3d omega_b = rot.transpose() * s.base_ang_vel;
  const Eigen::Vector3d torque_b = rot.transpose() * torque;
  Eigen::Vector3d omega_dot_b;
  for (int i = 0; i < 3; ++i) omega_dot_b[i] = torque_b[i] / inertia[i];
  omega_dot_b -= omega_b.cross(omega_b.cwiseProduct(inertia)).cwiseQuotient(inertia);
  const Eigen::Vector3d omega_b_new = omega_b + omega_dot_b * dt;
  s.base_ang_vel = rot * omega_b_new;

  s.base_pos += s.base_lin_vel * dt;
  s.base_quat = integrate_quat(s.base_quat, s.base_ang_vel, dt);

  // collision flags: trunk corners, thigh and shank sample points
  s.collision_flags.fill(false);
  const Eigen::Matrix3d rot_new = s.base_quat.toRotationMatrix();
  for (int cx = -1; cx <= 1; cx += 2) {
    for (int cy = -1; cy <= 1; cy += 2) {
      const Eigen::Vector3d corner = s.base_pos + rot_new * Eigen::Vector3d(
          cx * model.trunk_half.x(), cy * model.trunk_half.y(), -model.trunk_half.z());
      if (corner.z() < terrain.height(corner.x(), corner.y())) s.collision_flags[0] = true;
    }
  }
  for (int leg = 0; leg < kLegCount; ++leg) {
    const Eigen::Vector3d q = s.joint_pos.segment<3>(leg * 3);
    const LegPoints pts = leg_fk(model, leg, q[0], q[1], q[2]);
    const Eigen::Vector3d knee_w = s.base_pos + rot_new * pts.knee;
    const Eigen::Vector3d thigh_mid = s.base_pos + rot_new * ((pts.coxa_end + pts.knee) / 2.0);
    const Eigen::Vector3d shank_mid = s.base_pos + rot_new * ((pts.knee + pts.foot) / 2.0);
    if (knee_w.z() < terrain.height(knee_w.x(), knee_w.y()) ||
        thigh_mid.z() < terrain.height(thigh_mid.x(), thigh_mid.y()))
      s.collision_flags[1 + leg] = true;
    if (shank_mid.z() < terrain.height(shank_mid.x(), shank_mid.y()))
      s.collision_flags[7 + leg] = true;
  }

  s.time += dt;
  detail::check_finite(s);
  return s;
}

/// Adds a velocity impulse along a world axis (robustness protocol).
inline RobotState apply_perturbation(const RobotState& state, int axis, double magnitude) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("apply_perturbation: axis must be 0..2");
  if (std::abs(magnitude) > 5.0)
    throw std::invalid_argument("apply_perturbation: |magnitude| must be <= 5 m/s");
  RobotState s = state;
  s.base_lin_vel[axis] += magnitude;
  return s;
}

inline double base_height_above_terrain(const RobotState& s, const Terrain& terrain) {
  return s.base_pos.z() - terrain.height(s.base_pos.x(), s.base_pos.y());
}

/// 11 x 17 grid of (base height - terrain height) samples, 0.1 m spacing,
/// yaw aligned with the base. Rows advance along the heading axis.
inline Eigen::VectorXd terrain_scan(const RobotState& state, const Terrain& terrain) {
  const double yaw = quat_to_rpy(state.base_quat).z();
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Eigen::VectorXd scan(11 * 17);
  int k = 0;
  for (int i = 0; i < 11; ++i) {
    const double dx = (i - 5) * 0.1;
    for (int j = 0; j < 17; ++j) {
      const double dy = (j - 8) * 0.1;
      const double px = state.base_pos.x() + cy * dx - sy * dy;
      const double py = state.base_pos.y() + sy * dx + cy * dy;
      scan[k++] = state.base_pos.z() - terrain.height(px, py);
    }
  }
  return scan;
}

inline constexpr int kAmpDim = 61;

/// Discriminator feature vector: joint positions (18), joint velocities (18),
/// base-frame linear (3) and angular (3) velocity, base height over terrain
/// (1), base-frame foot positions (18).
inline Eigen::VectorXd extract_amp_state(const RobotState& state, const Terrain& terrain,
                                         const RobotModel& model) {
  Eigen::VectorXd v(kAmpDim);
  v.segment<18>(0) = state.joint_pos;
  v.segment<18>(18) = state.joint_vel;
  const Eigen::Matrix3d rot_t = state.base_quat.toRotationMatrix().transpose();
  v.segment<3>(36) = rot_t * state.base_lin_vel;
  v.segment<3>(39) = rot_t * state.base_ang_vel;
  v[42] = base_height_above_terrain(state, terrain);
  for (int leg = 0; leg < kLegCount; ++leg)
    v.segment<3>(43 + leg * 3) = foot_position(model, leg, state.joint_pos.segment<3>(leg * 3));
  return v;
}

enum class EpisodeStatus { go, terminate };

/// Early termination: trunk collision, |roll| or |pitch| beyond 60 degrees,
/// or the base dropping under 0.08 m above the terrain.
inline EpisodeStatus check_termination(const RobotState& state, const Terrain& terrain) {
  if (state.collision_flags[0]) return EpisodeStatus::terminate;
  const Eigen::Vector3d rpy = quat_to_rpy(state.base_quat);
  const double limit = 60.0 * kPi / 180.0;
  if (std::abs(rpy.x()) > limit || std::abs(rpy.y()) > limit) return EpisodeStatus::terminate;
  if (base_height_above_terrain(state, terrain) < 0.08) return EpisodeStatus::terminate;
  return EpisodeStatus::go;
}

/// Standing pose at the nominal configuration over the terrain origin.
inline RobotState default_standing_state(const RobotModel& model, const Terrain& terrain,
                                         double x = 0.0, double y = 0.0, double yaw = 0.0) {
  RobotState s;
  s.base_pos = {x, y, terrain.height(x, y) + model.standing_height};
  s.base_quat = yaw_quat(yaw);
  s.joint_pos = model.q0;
  return s;
}

}  // namespace hexamp
