#pragma once

#include <Eigen/Core>

#include <array>
#include <map>
#include <memory>
#include <vector>

#include "hexamp/math.hpp"
#include "hexamp/rewards.hpp"
#include "hexamp/robot.hpp"
#include "hexamp/sim.hpp"
#include "hexamp/terrain.hpp"

namespace hexamp {

inline constexpr int kPropDim = 42;   // omega, gravity dir, q, qdot
inline constexpr int kHistLen = 5;
inline constexpr int kHistDim = kPropDim * kHistLen;  // 210
inline constexpr int kPrivDim = 42;   // v, h, friction, foot forces, perturbation, collisions
inline constexpr int kScanDim = 11 * 17;  // 187
inline constexpr int kCmdDim = 3;
inline constexpr int kActDim = kJointCount;

struct CommandRanges {
  Eigen::Vector2d vx{-1.0, 1.0};
  Eigen::Vector2d vy{-0.5, 0.5};
  Eigen::Vector2d wz{-1.0, 1.0};
};

/// Uniform velocity command; yaw rate is drawn directly.
inline Eigen::Vector3d sample_command(Rng& rng, const CommandRanges& ranges) {
  return {rng.uniform(ranges.vx[0], ranges.vx[1]), rng.uniform(ranges.vy[0], ranges.vy[1]),
          rng.uniform(ranges.wz[0], ranges.wz[1])};
}

struct EnvConfig {
  std::vector<TerrainKind> terrain_kinds = {TerrainKind::flat};
  double terrain_friction = 1.0;
  CommandRanges commands;
  double episode_length_s = 10.0;
  bool randomize = true;
  RewardConfig reward;
};

/// Read-only pool of terrain variants shared by all environments.
class TerrainPool {
 public:
  TerrainPool(const std::vector<TerrainKind>& kinds, double friction, std::uint64_t seed) {
    for (TerrainKind kind : kinds) {
      const int levels = (kind == TerrainKind::flat) ? 1 : 10;
      for (int level = 0; level < levels; ++level)
        pool_[key(kind, level)] = std::make_unique<Terrain>(
            make_terrain(kind, level, split_seed(seed, key(kind, level)), friction));
    }
  }

  const Terrain& get(TerrainKind kind, int level) const {
    if (kind == TerrainKind::flat) level = 0;
    return *pool_.at(key(kind, level));
  }

 private:
  static std::uint64_t key(TerrainKind kind, int level) {
    return static_cast<std::uint64_t>(kind) * 16 + static_cast<std::uint64_t>(level);
  }
  std::map<std::uint64_t, std::unique_ptr<Terrain>> pool_;
};

struct EpisodeResult {
  int env_index = 0;
  double mean_lin_reward = 0.0;  // mean linear-tracking term over the episode
  bool terminated_early = false;
  int length = 0;
};

/// One training robot: simulator state plus the observation bookkeeping
/// (history stack, previous action, command, curriculum level).
class HexEnv {
 public:
  HexEnv(const RobotModel& model, const EnvConfig& cfg, const TerrainPool& pool, Rng rng)
      : model_(model), cfg_(cfg), pool_(&pool), rng_(rng) {
    reset();
  }

  void reset() {
    kind_ = cfg_.terrain_kinds[rng_.uniform_int(static_cast<int>(cfg_.terrain_kinds.size()))];
    terrain_ = &pool_->get(kind_, level_);
    rand_ = cfg_.randomize ? sample_randomization(rng_) : nominal_randomization(cfg_.terrain_friction);
    command_ = sample_command(rng_, cfg_.commands);
    q0_ = model_.q0 * rand_.joint_pos_scale;

    state_ = RobotState{};
    state_.joint_pos = q0_;
    double max_drop = 0.0;
    for (int leg = 0; leg < kLegCount; ++leg)
      max_drop = std::max(max_drop, -foot_position(model_, leg, q0_.segment<3>(leg * 3)).z());
    state_.base_pos = {0.0, 0.0, terrain_->height(0, 0) + max_drop + 0.01};

    prev_action_.setZero(kActDim);
    prev_joint_vel_.setZero();
    perturbation_.setZero();
    episode_steps_ = 0;
    episode_lin_sum_ = 0.0;
    merged_collisions_.fill(false);
    history_ = proprioception().replicate(kHistLen, 1);
  }

  /// Advances one 50 Hz control step (4 physics substeps under the CSP law).
  /// Returns the merged RobotState view used for rewards and termination.
  void step_control(const Eigen::VectorXd& action) {
    const JointVector q_d = action_to_target(action, q0_);
    const double kp1 = kNominalKp1 * rand_.stiffness_scale;
    const double kp2 = kNominalKp2 * rand_.damping_scale;
    prev_joint_vel_ = state_.joint_vel;
    mean_torque_.setZero();
    merged_collisions_.fill(false);
    for (int sub = 0; sub < kSubsteps; ++sub) {
      const JointVector tau = csp_torque(q_d, state_.joint_pos, state_.joint_vel, kp1, kp2);
      mean_torque_ += tau / kSubsteps;
      state_ = hexamp::step(state_, tau, *terrain_, rand_, model_);
      for (std::size_t i = 0; i < merged_collisions_.size(); ++i)
        merged_collisions_[i] = merged_collisions_[i] || state_.collision_flags[i];
    }
    episode_steps_ += 1;
    push_history();
  }

  /// 42-dim proprioception: base-frame angular velocity, projected gravity,
  /// joint positions, joint velocities.
  Eigen::VectorXd proprioception() const {
    Eigen::VectorXd o(kPropDim);
    const Eigen::Matrix3d rot_t = state_.base_quat.toRotationMatrix().transpose();
    o.segment<3>(0) = rot_t * state_.base_ang_vel;
    o.segment<3>(3) = rot_t * Eigen::Vector3d(0, 0, -1);
    o.segment<18>(6) = state_.joint_pos;
    o.segment<18>(24) = state_.joint_vel;
    return o;
  }

  /// 42-dim privileged view: base-frame linear velocity, height, friction,
  /// foot forces, perturbation (vector + direction), collision flags.
  Eigen::VectorXd privileged() const {
    Eigen::VectorXd p(kPrivDim);
    const Eigen::Matrix3d rot_t = state_.base_quat.toRotationMatrix().transpose();
    p.segment<3>(0) = rot_t * state_.base_lin_vel;
    p[3] = base_height_above_terrain(state_, *terrain_);
    p[4] = terrain_->friction * rand_.foot_friction;
    for (int leg = 0; leg < kLegCount; ++leg)
      p.segment<3>(5 + leg * 3) = rot_t * state_.foot_forces.row(leg).transpose();
    p.segment<3>(23) = perturbation_;
    p.segment<3>(26) =
        perturbation_.norm() > 1e-9 ? perturbation_.normalized().eval() : Eigen::Vector3d::Zero().eval();
    for (int i = 0; i < 13; ++i) p[29 + i] = merged_collisions_[i] ? 1.0 : 0.0;
    return p;
  }

  Eigen::VectorXd scan() const { return terrain_scan(state_, *terrain_); }

  Eigen::VectorXd amp_state() const { return extract_amp_state(state_, *terrain_, model_); }

  Eigen::Vector3d true_base_velocity() const {
    return state_.base_quat.toRotationMatrix().transpose() * state_.base_lin_vel;
  }

  /// Reward for the step just taken; merged substep collisions feed the
  /// collision count and termination.
  RewardBreakdown reward(const Eigen::VectorXd& action, double style_value) const {
    RobotState merged = state_;
    merged.collision_flags = merged_collisions_;
    return compute_reward(merged, command_, action, prev_action_, mean_torque_, prev_joint_vel_,
                          style_value, cfg_.reward);
  }

  bool terminated() const {
    RobotState merged = state_;
    merged.collision_flags = merged_collisions_;
    return check_termination(merged, *terrain_) == EpisodeStatus::terminate;
  }

  bool time_limit_reached() const {
    return episode_steps_ >= static_cast<int>(cfg_.episode_length_s / kControlDt + 0.5);
  }

  void finish_step(const Eigen::VectorXd& action, double lin_reward) {
    prev_action_ = action;
    episode_lin_sum_ += lin_reward;
  }

  EpisodeResult episode_result(bool early) const {
    EpisodeResult r;
    r.mean_lin_reward = episode_steps_ > 0 ? episode_lin_sum_ / episode_steps_ : 0.0;
    r.terminated_early = early;
    r.length = episode_steps_;
    return r;
  }

  void apply_perturbation_now(int axis, double magnitude) {
    state_ = hexamp::apply_perturbation(state_, axis, magnitude);
    perturbation_.setZero();
    perturbation_[axis] = magnitude;
  }

  const Eigen::VectorXd& history() const { return history_; }
  const Eigen::VectorXd& prev_action() const { return prev_action_; }
  const Eigen::Vector3d& command() const { return command_; }
  void set_command(const Eigen::Vector3d& cmd) { command_ = cmd; }
  const RobotState& state() const { return state_; }
  const Terrain& terrain() const { return *terrain_; }
  const RobotModel& model() const { return model_; }
  const RewardConfig& reward_config() const { return cfg_.reward; }
  int level() const { return level_; }
  void set_level(int level) { level_ = clamp_level(level); }
  int episode_steps() const { return episode_steps_; }
  const std::array<bool, kLegCount>& contact_flags() const { return state_.contact_flags; }

  static int clamp_level(int level) { return level < 0 ? 0 : (level > 9 ? 9 : level); }

 private:
  void push_history() {
    Eigen::VectorXd h(kHistDim);
    h.head(kHistDim - kPropDim) = history_.tail(kHistDim - kPropDim);
    h.tail(kPropDim) = proprioception();
    history_ = std::move(h);
  }

  RobotModel model_;
  EnvConfig cfg_;
  const TerrainPool* pool_;
  Rng rng_;
  const Terrain* terrain_ = nullptr;
  TerrainKind kind_ = TerrainKind::flat;
  int level_ = 0;
  RobotState state_;
  RandomizationSample rand_;
  Eigen::Vector3d command_ = Eigen::Vector3d::Zero();
  JointVector q0_ = JointVector::Zero();
  Eigen::VectorXd history_;
  Eigen::VectorXd prev_action_;
  JointVector prev_joint_vel_ = JointVector::Zero();
  JointVector mean_torque_ = JointVector::Zero();
  Eigen::Vector3d perturbation_ = Eigen::Vector3d::Zero();
  std::array<bool, 13> merged_collisions_{};
  int episode_steps_ = 0;
  double episode_lin_sum_ = 0.0;

 public:
  Rng& rng() { return rng_; }
};

/// Curriculum rule: promote after a clean episode with strong linear
/// tracking, demote on an early termination.
inline int update_curriculum_level(int level, const EpisodeResult& result, double lin_scale) {
  if (result.terminated_early) return HexEnv::clamp_level(level - 1);
  if (result.mean_lin_reward > 0.8 * lin_scale) return HexEnv::clamp_level(level + 1);
  return level;
}

}  // namespace hexamp
