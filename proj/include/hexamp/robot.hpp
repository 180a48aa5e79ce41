#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <optional>

#include "hexamp/math.hpp"

namespace hexamp {

// Leg order: LF RF LM RM LR RR. Tripod A = {LF, RM, LR}, B = {RF, LM, RR}.
inline constexpr int kLegCount = 6;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kJointCount = kLegCount * kJointsPerLeg;
inline constexpr std::array<int, 3> kTripodA = {0, 3, 4};
inline constexpr std::array<int, 3> kTripodB = {1, 2, 5};
inline constexpr std::array<const char*, 6> kLegNames = {"LF", "RF", "LM",
                                                         "RM", "LR", "RR"};

// Joint conventions: per leg (hip yaw, thigh pitch, shank pitch). Hip yaw
// rotates about base +z relative to the leg's mount direction; pitch angles
// are measured from the horizontal plane, positive moving the link downward.
// Shank pitch is relative to the thigh.
struct RobotModel {
  double base_mass = 25.5;                       // kg, legs lumped in
  Eigen::Vector3d base_inertia{0.62, 0.85, 1.30};  // kg m^2, diagonal
  double coxa_length = 0.10;                     // m
  double thigh_length = 0.20;                    // m
  double shank_length = 0.20;                    // m
  std::array<Eigen::Vector3d, kLegCount> hip_mounts;
  std::array<double, kLegCount> mount_yaw{};     // coxa direction at q1 = 0
  Eigen::Matrix<double, kJointCount, 1> q0;      // nominal joint positions
  double joint_torque_limit = 40.0;              // N m
  double joint_velocity_limit = 12.0;            // rad/s
  double joint_inertia = 0.05;                   // kg m^2 per joint servo
  double standing_height = 0.30;                 // m, base over flat ground
  // trunk collision box half extents, box center at the base origin
  Eigen::Vector3d trunk_half{0.30, 0.25, 0.06};
};

/// The stock robot: 25.5 kg, 0.30 m stance, middle legs mounted
/// 0.137 m further out than the front/rear pairs.
inline RobotModel default_model() {
  RobotModel m;
  const double side_y = 0.15;
  const double mid_y = side_y + 0.137;
  const double fore_x = 0.25;
  m.hip_mounts[0] = {+fore_x, +side_y, 0.0};  // LF
  m.hip_mounts[1] = {+fore_x, -side_y, 0.0};  // RF
  m.hip_mounts[2] = {0.0, +mid_y, 0.0};       // LM
  m.hip_mounts[3] = {0.0, -mid_y, 0.0};       // RM
  m.hip_mounts[4] = {-fore_x, +side_y, 0.0};  // LR
  m.hip_mounts[5] = {-fore_x, -side_y, 0.0};  // RR
  m.mount_yaw = {kPi / 3, -kPi / 3, kPi / 2, -kPi / 2, 2 * kPi / 3, -2 * kPi / 3};
  // (0, 30deg, 60deg) puts the foot 0.30 m below the hip plane:
  // 0.2 sin(30) + 0.2 sin(90) = 0.30
  for (int leg = 0; leg < kLegCount; ++leg) {
    m.q0[leg * 3 + 0] = 0.0;
    m.q0[leg * 3 + 1] = kPi / 6;
    m.q0[leg * 3 + 2] = kPi / 3;
  }
  return m;
}

struct LegPoints {
  Eigen::Vector3d coxa_end;
  Eigen::Vector3d knee;
  Eigen::Vector3d foot;
};

/// Forward kinematics of one leg in the base frame.
inline LegPoints leg_fk(const RobotModel& m, int leg, double q1, double q2, double q3) {
  const double phi = m.mount_yaw[leg] + q1;
  const Eigen::Vector3d dir(std::cos(phi), std::sin(phi), 0.0);
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  LegPoints p;
  p.coxa_end = m.hip_mounts[leg] + m.coxa_length * dir;
  p.knee = p.coxa_end + m.thigh_length * (std::cos(q2) * dir + std::sin(q2) * down);
  const double k = q2 + q3;
  p.foot = p.knee + m.shank_length * (std::cos(k) * dir + std::sin(k) * down);
  return p;
}

inline Eigen::Vector3d foot_position(const RobotModel& m, int leg,
                                     const Eigen::Vector3d& q) {
  return leg_fk(m, leg, q[0], q[1], q[2]).foot;
}

/// Closed-form leg IK (knee-up branch). Returns nullopt when the target is
/// outside the annular workspace.
inline std::optional<Eigen::Vector3d> leg_ik(const RobotModel& m, int leg,
                                             const Eigen::Vector3d& target_base) {
  const Eigen::Vector3d rel = target_base - m.hip_mounts[leg];
  const double phi = std::atan2(rel.y(), rel.x());
  double q1 = phi - m.mount_yaw[leg];
  while (q1 > kPi) q1 -= 2 * kPi;
  while (q1 < -kPi) q1 += 2 * kPi;

  const double rho = std::hypot(rel.x(), rel.y()) - m.coxa_length;
  const double zeta = -rel.z();
  const double c2 = rho * rho + zeta * zeta;
  const double c = std::sqrt(c2);
  const double lt = m.thigh_length, ls = m.shank_length;
  if (c > lt + ls - 1e-9 || c < std::abs(lt - ls) + 1e-9) return std::nullopt;

  const double beta = std::atan2(zeta, rho);
  const double alpha = std::acos(clamp((lt * lt + c2 - ls * ls) / (2.0 * lt * c), -1.0, 1.0));
  const double gamma = std::acos(clamp((lt * lt + ls * ls - c2) / (2.0 * lt * ls), -1.0, 1.0));
  return Eigen::Vector3d(q1, beta - alpha, kPi - gamma);
}

/// Base-frame foot Jacobian d foot / d (q1, q2, q3).
inline Eigen::Matrix3d leg_jacobian(const RobotModel& m, int leg,
                                    const Eigen::Vector3d& q) {
  const double phi = m.mount_yaw[leg] + q[0];
  const Eigen::Vector3d dir(std::cos(phi), std::sin(phi), 0.0);
  const Eigen::Vector3d perp(-std::sin(phi), std::cos(phi), 0.0);
  const double c2 = std::cos(q[1]), s2 = std::sin(q[1]);
  const double ck = std::cos(q[1] + q[2]), sk = std::sin(q[1] + q[2]);
  const double lt = m.thigh_length, ls = m.shank_length;
  const double reach = m.coxa_length + lt * c2 + ls * ck;
  Eigen::Matrix3d jac;
  jac.col(0) = reach * perp;
  jac.col(1) = -(lt * s2 + ls * sk) * dir - (lt * c2 + ls * ck) * Eigen::Vector3d::UnitZ();
  jac.col(2) = -ls * sk * dir - ls * ck * Eigen::Vector3d::UnitZ();
  return jac;
}

/// Nominal stance footholds in the base frame.
inline std::array<Eigen::Vector3d, kLegCount> nominal_footholds(const RobotModel& m) {
  std::array<Eigen::Vector3d, kLegCount> feet;
  for (int leg = 0; leg < kLegCount; ++leg) {
    Eigen::Vector3d q(m.q0[leg * 3], m.q0[leg * 3 + 1], m.q0[leg * 3 + 2]);
    feet[leg] = foot_position(m, leg, q);
  }
  return feet;
}

}  // namespace hexamp
