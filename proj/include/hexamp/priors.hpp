#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexamp/checkpoint.hpp"
#include "hexamp/math.hpp"
#include "hexamp/robot.hpp"
#include "hexamp/sim.hpp"

namespace hexamp {

inline constexpr double kFrameDt = 0.02;  // 50 Hz reference motion
// Gait phase offset keeps sampled frames away from exact stance/swing
// boundaries (0.02 s frames never hit a multiple of the 0.43 s half period
// when shifted by 0.005 s).
inline constexpr double kGaitPhaseOffset = 0.005;
// Swing feet clear this height at every sampled frame; stance feet sit at
// exactly zero, so dataset validation thresholds stance at 2e-5 m.
inline constexpr double kStanceHeightTol = 2e-5;

struct GaitParams {
  double period = 0.86;       // s, divides the 8.6 s segment evenly
  double duty_factor = 0.5;   // tripod
  double step_height = 0.06;  // m
  double base_height = 0.30;  // m
  Eigen::Vector3d command = Eigen::Vector3d::Zero();  // vx, vy, wz

  void validate() const {
    if (period <= 0) throw std::invalid_argument("gait period must be > 0");
    if (step_height <= 0 || step_height > 0.15)
      throw std::invalid_argument("step_height must be in (0, 0.15]");
    if (duty_factor != 0.5)
      throw std::invalid_argument("tripod gait requires duty_factor = 0.5");
  }
};

struct GenerationFault : std::runtime_error {
  explicit GenerationFault(const std::string& what) : std::runtime_error(what) {}
};

namespace gait {

// closed-form planar integration of a constant body-frame command
inline void base_pose(const Eigen::Vector3d& cmd, double t, Eigen::Vector2d& pos, double& yaw) {
  const double w = cmd.z();
  yaw = w * t;
  if (std::abs(w) < 1e-9) {
    pos = {cmd.x() * t, cmd.y() * t};
  } else {
    pos = {(cmd.x() * std::sin(yaw) + cmd.y() * (std::cos(yaw) - 1.0)) / w,
           (cmd.x() * (1.0 - std::cos(yaw)) + cmd.y() * std::sin(yaw)) / w};
  }
}

inline Eigen::Vector2d neutral_world(const Eigen::Vector3d& cmd, const Eigen::Vector2d& neutral_b,
                                     double t) {
  Eigen::Vector2d pos;
  double yaw;
  base_pose(cmd, t, pos, yaw);
  const double c = std::cos(yaw), s = std::sin(yaw);
  return pos + Eigen::Vector2d(c * neutral_b.x() - s * neutral_b.y(),
                               s * neutral_b.x() + c * neutral_b.y());
}

// cycloidal swing profile: zero velocity at both ends
inline double cycloid_progress(double s) { return s - std::sin(2 * kPi * s) / (2 * kPi); }
inline double swing_height(double s, double h) { return h * (1.0 - std::cos(2 * kPi * s)) / 2.0; }

}  // namespace gait

inline bool tripod_a_member(int leg) {
  return leg == kTripodA[0] || leg == kTripodA[1] || leg == kTripodA[2];
}

/// True when `leg` is in stance at time t (phase-offset tripod schedule).
inline bool leg_in_stance(const GaitParams& params, int leg, double t) {
  const double phase = std::fmod((t + kGaitPhaseOffset) / params.period, 1.0);
  const bool first_half = phase < 0.5;
  return tripod_a_member(leg) ? first_half : !first_half;
}

/// Synthesizes one constant-command tripod segment as a 61 x n frame matrix.
/// Stance feet hold their world foothold; swing feet travel a cycloid to the
/// next foothold (symmetric about the neutral print, half a stance of travel).
inline Eigen::MatrixXd generate_segment(const RobotModel& model, const GaitParams& params,
                                        double duration) {
  params.validate();
  const int steps = static_cast<int>(std::lround(duration / kFrameDt));
  const int frames = steps + 1;
  const Eigen::Vector3d cmd = params.command;
  const bool standstill = cmd.norm() < 1e-9;
  const double stance_time = params.period * params.duty_factor;
  const double swing_time = params.period - stance_time;

  const auto neutral = nominal_footholds(model);
  std::array<Eigen::Vector2d, kLegCount> neutral_xy;
  for (int leg = 0; leg < kLegCount; ++leg)
    neutral_xy[leg] = {neutral[leg].x(), neutral[leg].y()};

  // foothold of the stance phase that begins at time ts: the neutral print
  // at the stance midpoint
  const auto foothold = [&](int leg, double ts) {
    return gait::neutral_world(cmd, neutral_xy[leg], ts + stance_time / 2.0);
  };

  Eigen::MatrixXd q(kJointCount, frames);
  Eigen::MatrixXd feet_b(kLegCount * 3, frames);

  for (int k = 0; k < frames; ++k) {
    const double t = k * kFrameDt;
    Eigen::Vector2d base_xy;
    double yaw;
    gait::base_pose(cmd, t, base_xy, yaw);
    const double cy = std::cos(yaw), sy = std::sin(yaw);

    for (int leg = 0; leg < kLegCount; ++leg) {
      Eigen::Vector2d foot_xy;
      double foot_z = 0.0;
      if (standstill) {
        foot_xy = neutral_xy[leg];
      } else {
        // locate this leg's position in its gait cycle
        const double tp = t + kGaitPhaseOffset;
        const double cycle = std::floor(tp / params.period);
        const double local = tp - cycle * params.period;  // [0, period)
        const bool first_half = local < stance_time;
        const bool stance = tripod_a_member(leg) ? first_half : !first_half;
        if (tripod_a_member(leg)) {
          if (stance) {
            foot_xy = foothold(leg, cycle * params.period - kGaitPhaseOffset);
          } else {
            const double t_lift = cycle * params.period + stance_time - kGaitPhaseOffset;
            const double s = (t - t_lift) / swing_time;
            const Eigen::Vector2d from = foothold(leg, t_lift - stance_time);
            const Eigen::Vector2d to = foothold(leg, t_lift + swing_time);
            foot_xy = from + gait::cycloid_progress(s) * (to - from);
            foot_z = gait::swing_height(s, params.step_height);
          }
        } else {
          if (stance) {
            foot_xy = foothold(leg, cycle * params.period + stance_time - kGaitPhaseOffset);
          } else {
            // set B swings in the first half of the cycle
            const double t_lift = cycle * params.period - kGaitPhaseOffset;
            const double s = (t - t_lift) / swing_time;
            const Eigen::Vector2d from = foothold(leg, t_lift - stance_time);
            const Eigen::Vector2d to = foothold(leg, t_lift + swing_time);
            foot_xy = from + gait::cycloid_progress(s) * (to - from);
            foot_z = gait::swing_height(s, params.step_height);
          }
        }
      }
      // world -> base frame
      const Eigen::Vector2d rel = foot_xy - base_xy;
      const Eigen::Vector3d target_b(cy * rel.x() + sy * rel.y(),
                                     -sy * rel.x() + cy * rel.y(),
                                     foot_z - params.base_height);
      const auto ik = leg_ik(model, leg, target_b);
      if (!ik)
        throw GenerationFault("ik unreachable for leg " + std::string(kLegNames[leg]) +
                              " at frame " + std::to_string(k));
      q.col(k).segment<3>(leg * 3) = *ik;
      feet_b.col(k).segment<3>(leg * 3) = target_b;
    }
  }

  // joint velocities by central finite difference (one-sided at the ends)
  Eigen::MatrixXd qdot(kJointCount, frames);
  for (int k = 0; k < frames; ++k) {
    if (k == 0)
      qdot.col(k) = (q.col(1) - q.col(0)) / kFrameDt;
    else if (k == frames - 1)
      qdot.col(k) = (q.col(k) - q.col(k - 1)) / kFrameDt;
    else
      qdot.col(k) = (q.col(k + 1) - q.col(k - 1)) / (2.0 * kFrameDt);
  }

  Eigen::MatrixXd out(kAmpDim, frames);
  for (int k = 0; k < frames; ++k) {
    out.col(k).segment<18>(0) = q.col(k);
    out.col(k).segment<18>(18) = qdot.col(k);
    out.col(k).segment<3>(36) = Eigen::Vector3d(cmd.x(), cmd.y(), 0.0);
    out.col(k).segment<3>(39) = Eigen::Vector3d(0.0, 0.0, cmd.z());
    out.col(k)[42] = params.base_height;
    out.col(k).segment<18>(43) = feet_b.col(k);
  }
  return out;
}

struct DatasetSegment {
  std::uint32_t start = 0;  // first frame index
  std::uint32_t frames = 0;
  Eigen::Vector3f command = Eigen::Vector3f::Zero();
};

/// Time-ordered reference frames with per-dimension normalization stats.
/// Frames are stored in f32, exactly as the file carries them.
struct PriorDataset {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic> frames;  // 61 x N
  std::vector<DatasetSegment> segments;
  Eigen::VectorXd mean;  // 61
  Eigen::VectorXd std;   // 61, floored at 1e-6
  bool has_stats = false;

  Eigen::Index frame_count() const { return frames.cols(); }

  /// Frame indices i for which (i, i+1) stays inside one segment.
  std::vector<std::uint32_t> pair_index() const {
    std::vector<std::uint32_t> idx;
    for (const auto& seg : segments)
      for (std::uint32_t i = 0; i + 1 < seg.frames; ++i) idx.push_back(seg.start + i);
    return idx;
  }

  Eigen::VectorXd normalize(const Eigen::VectorXd& frame) const {
    return (frame - mean).cwiseQuotient(std);
  }
};

/// Default 7-class command set: forward, backward, two lateral, two turn,
/// one combined motion.
inline std::vector<Eigen::Vector3d> default_command_list() {
  return {{0.3, 0.0, 0.0}, {-0.3, 0.0, 0.0}, {0.0, 0.2, 0.0},  {0.0, -0.2, 0.0},
          {0.0, 0.0, 0.5}, {0.0, 0.0, -0.5}, {0.3, 0.1, 0.3}};
}

inline PriorDataset build_dataset(const RobotModel& model, GaitParams params,
                                  const std::vector<Eigen::Vector3d>& commands,
                                  double segment_duration = 8.6) {
  if (commands.empty()) throw std::invalid_argument("build_dataset: empty command list");
  PriorDataset ds;
  std::vector<Eigen::MatrixXd> segs;
  Eigen::Index total = 0;
  for (const auto& cmd : commands) {
    params.command = cmd;
    segs.push_back(generate_segment(model, params, segment_duration));
    DatasetSegment seg;
    seg.start = static_cast<std::uint32_t>(total);
    seg.frames = static_cast<std::uint32_t>(segs.back().cols());
    seg.command = cmd.cast<float>();
    ds.segments.push_back(seg);
    total += segs.back().cols();
  }
  ds.frames.resize(kAmpDim, total);
  Eigen::Index at = 0;
  for (const auto& seg : segs) {
    ds.frames.middleCols(at, seg.cols()) = seg.cast<float>();
    at += seg.cols();
  }
  // stats over the stored (f32) values, accumulated in f64
  ds.mean.setZero(kAmpDim);
  ds.std.setZero(kAmpDim);
  for (Eigen::Index c = 0; c < total; ++c) ds.mean += ds.frames.col(c).cast<double>();
  ds.mean /= static_cast<double>(total);
  for (Eigen::Index c = 0; c < total; ++c) {
    const Eigen::VectorXd d = ds.frames.col(c).cast<double>() - ds.mean;
    ds.std += d.cwiseProduct(d);
  }
  ds.std = (ds.std / static_cast<double>(total)).cwiseSqrt().cwiseMax(1e-6);
  ds.has_stats = true;
  return ds;
}

/// Uniformly samples consecutive-frame pairs (never across segment
/// boundaries) and normalizes them. Returns a 122 x batch matrix: rows 0-60
/// the first frame, 61-121 the successor.
inline Eigen::MatrixXd sample_real_pairs(const PriorDataset& ds, int batch, Rng& rng) {
  if (batch < 1) throw std::invalid_argument("sample_real_pairs: batch must be >= 1");
  const auto idx = ds.pair_index();
  if (static_cast<std::size_t>(batch) > idx.size())
    throw std::runtime_error("sample_real_pairs: batch " + std::to_string(batch) +
                             " exceeds available pairs " + std::to_string(idx.size()));
  Eigen::MatrixXd out(2 * kAmpDim, batch);
  for (int b = 0; b < batch; ++b) {
    const std::uint32_t i = idx[rng.uniform_int(static_cast<int>(idx.size()))];
    out.col(b).head(kAmpDim) = ds.normalize(ds.frames.col(i).cast<double>());
    out.col(b).tail(kAmpDim) = ds.normalize(ds.frames.col(i + 1).cast<double>());
  }
  return out;
}

// ---- AMPD file format ----------------------------------------------------
// magic "AMPD", u16 version = 1, u32 frame count, u32 dim, u32 segment
// count, segment table (u32 start, f32 command x3), f32 frames row-major
// (frame by frame), f64 mean[dim], f64 std[dim]. Little-endian throughout.

inline constexpr char kDatasetMagic[4] = {'A', 'M', 'P', 'D'};
inline constexpr std::uint16_t kDatasetVersion = 1;

inline void save_dataset(const PriorDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  bin::write_bytes(os, kDatasetMagic, 4);
  bin::write_raw<std::uint16_t>(os, kDatasetVersion);
  bin::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ds.frame_count()));
  bin::write_raw<std::uint32_t>(os, kAmpDim);
  bin::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ds.segments.size()));
  for (const auto& seg : ds.segments) {
    bin::write_raw<std::uint32_t>(os, seg.start);
    for (int i = 0; i < 3; ++i) bin::write_raw<float>(os, seg.command[i]);
  }
  for (Eigen::Index c = 0; c < ds.frame_count(); ++c)
    for (int r = 0; r < kAmpDim; ++r) bin::write_raw<float>(os, ds.frames(r, c));
  for (int r = 0; r < kAmpDim; ++r) bin::write_raw<double>(os, ds.mean[r]);
  for (int r = 0; r < kAmpDim; ++r) bin::write_raw<double>(os, ds.std[r]);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline PriorDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  char magic[4];
  bin::read_bytes(is, magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw std::runtime_error("'" + path + "' is not a prior dataset file");
  const auto version = bin::read_raw<std::uint16_t>(is);
  if (version != kDatasetVersion)
    throw std::runtime_error("unsupported dataset version " + std::to_string(version));
  const auto frames = bin::read_raw<std::uint32_t>(is);
  const auto dim = bin::read_raw<std::uint32_t>(is);
  if (dim != kAmpDim)
    throw std::runtime_error("dataset dim " + std::to_string(dim) + ", expected 61");
  const auto seg_count = bin::read_raw<std::uint32_t>(is);
  PriorDataset ds;
  ds.segments.resize(seg_count);
  for (auto& seg : ds.segments) {
    seg.start = bin::read_raw<std::uint32_t>(is);
    for (int i = 0; i < 3; ++i) seg.command[i] = bin::read_raw<float>(is);
  }
  for (std::size_t s = 0; s < ds.segments.size(); ++s) {
    const std::uint32_t end = (s + 1 < ds.segments.size()) ? ds.segments[s + 1].start : frames;
    ds.segments[s].frames = end - ds.segments[s].start;
  }
  ds.frames.resize(kAmpDim, frames);
  for (std::uint32_t c = 0; c < frames; ++c)
    for (int r = 0; r < kAmpDim; ++r) ds.frames(r, c) = bin::read_raw<float>(is);
  ds.mean.resize(kAmpDim);
  ds.std.resize(kAmpDim);
  for (int r = 0; r < kAmpDim; ++r) ds.mean[r] = bin::read_raw<double>(is);
  for (int r = 0; r < kAmpDim; ++r) ds.std[r] = bin::read_raw<double>(is);
  ds.has_stats = true;
  return ds;
}

}  // namespace hexamp
