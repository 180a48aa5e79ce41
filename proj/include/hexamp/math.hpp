#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>

namespace hexamp {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;  // m/s^2

// splitmix64, used to derive decorrelated seeds for per-environment streams.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with explicit uniform/normal draws so sequences are
// bit-stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    for (int i = 0; i < 4; ++i) s_[i] = split_seed(seed, 977 + i);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (fresh pair per two calls)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(uniform() * n) % n;
  }

  Rng split(std::uint64_t stream) const {
    Rng r;
    r.s_[0] = split_seed(s_[0], stream);
    r.s_[1] = split_seed(s_[1], stream + 0x51ULL);
    r.s_[2] = split_seed(s_[2], stream + 0xa3ULL);
    r.s_[3] = split_seed(s_[3], stream + 0xf7ULL);
    return r;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline double square(double v) { return v * v; }

// yaw-pitch-roll (ZYX) extraction
inline Eigen::Vector3d quat_to_rpy(const Eigen::Quaterniond& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  const double roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  double sp = 2.0 * (w * y - z * x);
  sp = clamp(sp, -1.0, 1.0);
  const double pitch = std::asin(sp);
  const double yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  return {roll, pitch, yaw};
}

inline Eigen::Quaterniond yaw_quat(double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
}

// first-order quaternion integration with world-frame angular velocity
inline Eigen::Quaterniond integrate_quat(const Eigen::Quaterniond& q,
                                         const Eigen::Vector3d& omega_world,
                                         double dt) {
  const double angle = omega_world.norm() * dt;
  if (angle < 1e-12) return q.normalized();
  const Eigen::Vector3d axis = omega_world.normalized();
  Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, axis));
  return (dq * q).normalized();
}

}  // namespace hexamp
