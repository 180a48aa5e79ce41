#pragma once

#include <Eigen/Core>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hexamp/chart.hpp"
#include "hexamp/config.hpp"
#include "hexamp/priors.hpp"
#include "hexamp/trainer.hpp"

namespace hexamp {

inline int log_level() {
  const char* v = std::getenv("HEXAMP_LOG");
  return v ? std::atoi(v) : 1;
}

inline std::string dataset_path_of(const RunConfig& cfg) {
  return cfg.dataset_path.empty() ? cfg.out_dir + "/priors.ampd" : cfg.dataset_path;
}

inline void write_config_echo(const RunConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir + "/config_echo.ini");
  os << echo_config(cfg);
}

// ---- gen-priors ------------------------------------------------------------

inline int cmd_gen_priors(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const RobotModel model = default_model();
  const PriorDataset ds = build_dataset(model, cfg.gait, default_command_list(), cfg.segment_duration);
  const std::string path = dataset_path_of(cfg);
  save_dataset(ds, path);
  write_config_echo(cfg, cfg.out_dir);
  std::cout << "dataset: " << path << "\n";
  std::cout << "frames: " << ds.frame_count() << "  dim: " << kAmpDim
            << "  segments: " << ds.segments.size() << "\n";
  std::cout << "segment  start  frames  command (vx vy wz)\n";
  for (std::size_t i = 0; i < ds.segments.size(); ++i) {
    const auto& s = ds.segments[i];
    std::cout << "  " << i << "      " << s.start << "   " << s.frames << "    " << s.command[0]
              << " " << s.command[1] << " " << s.command[2] << "\n";
  }
  return 0;
}

// ---- validate-dataset ------------------------------------------------------

struct DatasetValidation {
  bool dims_ok = true;
  bool stance_ok = true;
  bool alternation_ok = true;
  double max_fk_residual = 0;
  double max_displacement_error = 0;
  std::string detail;

  bool ok() const {
    return dims_ok && stance_ok && alternation_ok && max_fk_residual < 1e-6 &&
           max_displacement_error < 0.05;
  }
};

/// Checks the tripod invariants directly on the stored frames: exactly three
/// stance feet everywhere, tripod sets alternating, FK of the stored joint
/// angles matching the stored foot positions, and the base displacement
/// implied by the stored velocities matching the segment command.
inline DatasetValidation validate_dataset(const PriorDataset& ds) {
  DatasetValidation v;
  const RobotModel model = default_model();
  for (const auto& seg : ds.segments) {
    int prev_set = -1;
    int alternations = 0;
    for (std::uint32_t k = 0; k < seg.frames; ++k) {
      const Eigen::VectorXd frame = ds.frames.col(seg.start + k).cast<double>();
      if (frame.size() != kAmpDim) {
        v.dims_ok = false;
        continue;
      }
      const double base_h = frame[42];
      int stance = 0;
      bool set_a_stance = false, set_b_stance = false;
      for (int leg = 0; leg < kLegCount; ++leg) {
        const Eigen::Vector3d foot_b = frame.segment<3>(43 + leg * 3);
        const double world_z = foot_b.z() + base_h;
        const bool on_ground = world_z < kStanceHeightTol;
        stance += on_ground ? 1 : 0;
        if (on_ground && tripod_a_member(leg)) set_a_stance = true;
        if (on_ground && !tripod_a_member(leg)) set_b_stance = true;
        // FK residual against the stored joint block
        const Eigen::Vector3d q = frame.segment<3>(leg * 3);
        const double res = (foot_position(model, leg, q) - foot_b).norm();
        v.max_fk_residual = std::max(v.max_fk_residual, res);
      }
      if (stance != 3) {
        v.stance_ok = false;
        if (v.detail.empty())
          v.detail = "frame " + std::to_string(seg.start + k) + " has " + std::to_string(stance) +
                     " stance feet";
      }
      if (set_a_stance && set_b_stance) v.alternation_ok = v.alternation_ok && stance == 3;
      const int cur_set = set_a_stance && !set_b_stance ? 0 : (!set_a_stance && set_b_stance ? 1 : -1);
      if (cur_set >= 0 && prev_set >= 0 && cur_set != prev_set) ++alternations;
      if (cur_set >= 0) prev_set = cur_set;
    }
    if (seg.frames * kFrameDt > 2.0 && alternations < 2) v.alternation_ok = false;

    // displacement implied by the stored base velocities vs the command
    Eigen::Vector2d pos(0, 0);
    double yaw = 0;
    for (std::uint32_t k = 0; k + 1 < seg.frames; ++k) {
      const Eigen::VectorXd frame = ds.frames.col(seg.start + k).cast<double>();
      const double c = std::cos(yaw), s = std::sin(yaw);
      pos += kFrameDt * Eigen::Vector2d(c * frame[36] - s * frame[37],
                                        s * frame[36] + c * frame[37]);
      yaw += kFrameDt * frame[41];
    }
    Eigen::Vector2d expect;
    double yaw_expect;
    gait::base_pose(seg.command.cast<double>(), (seg.frames - 1) * kFrameDt, expect, yaw_expect);
    const double scale = std::max(0.05, expect.norm());
    v.max_displacement_error = std::max(v.max_displacement_error, (pos - expect).norm() / scale);
  }
  return v;
}

inline int cmd_validate_dataset(const std::string& path) {
  const PriorDataset ds = load_dataset(path);
  const DatasetValidation v = validate_dataset(ds);
  std::cout << "frames: " << ds.frame_count() << "  segments: " << ds.segments.size() << "\n";
  std::cout << "dims 61: " << (v.dims_ok ? "ok" : "FAIL") << "\n";
  std::cout << "three-feet stance everywhere: " << (v.stance_ok ? "ok" : "FAIL")
            << (v.detail.empty() ? "" : "  (" + v.detail + ")") << "\n";
  std::cout << "tripod alternation: " << (v.alternation_ok ? "ok" : "FAIL") << "\n";
  std::cout << "max fk residual: " << v.max_fk_residual << " m\n";
  std::cout << "max displacement error: " << v.max_displacement_error * 100 << " %\n";
  std::cout << (v.ok() ? "dataset valid" : "dataset INVALID") << "\n";
  return v.ok() ? 0 : 1;
}

// ---- train ----------------------------------------------------------------

inline int cmd_train(const RunConfig& cfg, const std::string& resume_path = "") {
  std::filesystem::create_directories(cfg.out_dir);
  const std::string data_path = dataset_path_of(cfg);
  if (!std::filesystem::exists(data_path))
    throw std::runtime_error("dataset '" + data_path + "' not found; run gen-priors first");
  const PriorDataset dataset = load_dataset(data_path);
  write_config_echo(cfg, cfg.out_dir);

  const RobotModel model = default_model();
  Trainer trainer(model, cfg.train, cfg.env_config(), dataset, cfg.seed);

  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  const std::string ckpt_path = cfg.out_dir + "/checkpoint.hamp";
  bool append = false;
  if (!resume_path.empty()) {
    trainer.load_checkpoint(resume_path);
    append = std::filesystem::exists(metrics_path);
    if (log_level() > 0)
      std::cout << "resumed from " << resume_path << " at iteration " << trainer.iteration() << "\n";
  }
  std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::out);
  if (!append) metrics << kMetricsHeader << "\n";

  trainer.run(ckpt_path, [&](const IterationRow& row) {
    metrics << format_metrics_row(row) << "\n";
    metrics.flush();
    if (log_level() > 0 && (row.iteration % 10 == 0 || row.iteration + 1 == cfg.train.max_iterations))
      std::cout << "iter " << row.iteration << "  reward " << row.mean_total_reward << "  style "
                << row.mean_style << "  disc " << row.disc_real_mean << "/" << row.disc_fake_mean
                << "  kl " << row.kl << "\n";
  });
  trainer.save_checkpoint(ckpt_path);
  if (log_level() > 0) std::cout << "checkpoint: " << ckpt_path << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalScenario {
  enum class Kind { sine_track, constant, terrain };
  Kind kind = Kind::sine_track;
  Eigen::Vector3d command{0.3, 0.0, 0.0};
  TerrainKind terrain = TerrainKind::flat;
  int level = 0;

  static EvalScenario parse(const std::string& text) {
    EvalScenario s;
    if (text == "sine_track") {
      s.kind = Kind::sine_track;
      return s;
    }
    if (text.rfind("constant", 0) == 0) {
      s.kind = Kind::constant;
      const auto colon = text.find(':');
      if (colon != std::string::npos) {
        const auto parts = detail::split_list(text.substr(colon + 1));
        if (parts.size() != 3)
          throw std::invalid_argument("constant scenario needs vx,vy,wz");
        s.command = {detail::parse_double(parts[0]), detail::parse_double(parts[1]),
                     detail::parse_double(parts[2])};
      }
      return s;
    }
    if (text.rfind("terrain:", 0) == 0) {
      s.kind = Kind::terrain;
      const std::string rest = text.substr(8);
      const auto colon = rest.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("terrain scenario is terrain:<kind>:<level>");
      s.terrain = terrain_kind_from_name(rest.substr(0, colon));
      s.level = std::stoi(rest.substr(colon + 1));
      return s;
    }
    throw std::invalid_argument("unknown scenario '" + text + "'");
  }

  Eigen::Vector3d command_at(double t) const {
    if (kind != Kind::sine_track) return command;
    const double w = 2.0 * kPi / 8.0;  // 8 s command period
    return {0.4 * std::sin(w * t), 0.2 * std::sin(w * t + kPi / 2), 0.5 * std::sin(w * t + kPi)};
  }
};

struct EvalSummary {
  double rms_err_vx = 0, rms_err_vy = 0, rms_err_wz = 0;
  double rms_vz = 0, rms_roll = 0, rms_pitch = 0;
  int steps = 0;
  bool terminated = false;
};

/// Deterministic policy rollout writing one CSV row per 50 Hz step.
inline EvalSummary run_eval(const DeployedPolicy& dp, const EvalScenario& scenario,
                            double duration, std::ostream* trajectory) {
  const RobotModel model = default_model();
  EnvConfig env_cfg;
  env_cfg.terrain_kinds = {scenario.terrain};
  env_cfg.randomize = false;
  env_cfg.episode_length_s = duration + 1.0;
  TerrainPool pool({scenario.terrain}, 1.0, 7);
  HexEnv env(model, env_cfg, pool, Rng(7));
  env.set_level(scenario.level);
  env.reset();

  if (trajectory)
    *trajectory << "t,cmd_vx,cmd_vy,cmd_wz,vx,vy,wz,vz,roll,pitch,contacts\n";

  EvalSummary sum;
  const int steps = static_cast<int>(duration / kControlDt + 0.5);
  double se_vx = 0, se_vy = 0, se_wz = 0, se_vz = 0, se_roll = 0, se_pitch = 0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * kControlDt;
    env.set_command(scenario.command_at(t));

    Eigen::MatrixXd hist = env.history();
    Eigen::MatrixXd cmd = env.command();
    Eigen::MatrixXd a_prev = env.prev_action();
    const PolicyForward pf = policy_forward(dp.policy, hist, cmd, a_prev);
    env.step_control(pf.mean.col(0));
    env.finish_step(pf.mean.col(0), 0.0);

    const RobotState& s = env.state();
    const Eigen::Vector3d rpy = quat_to_rpy(s.base_quat);
    const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
    const double vx = cy * s.base_lin_vel.x() + sy * s.base_lin_vel.y();
    const double vy = -sy * s.base_lin_vel.x() + cy * s.base_lin_vel.y();
    const Eigen::Vector3d omega_b = s.base_quat.toRotationMatrix().transpose() * s.base_ang_vel;
    const Eigen::Vector3d c = env.command();

    if (trajectory) {
      std::string contacts;
      for (int leg = 0; leg < kLegCount; ++leg) contacts += env.contact_flags()[leg] ? '1' : '0';
      *trajectory << t << ',' << c.x() << ',' << c.y() << ',' << c.z() << ',' << vx << ',' << vy
                  << ',' << omega_b.z() << ',' << s.base_lin_vel.z() << ',' << rpy.x() << ','
                  << rpy.y() << ',' << contacts << "\n";
    }

    se_vx += square(vx - c.x());
    se_vy += square(vy - c.y());
    se_wz += square(omega_b.z() - c.z());
    se_vz += square(s.base_lin_vel.z());
    se_roll += square(rpy.x());
    se_pitch += square(rpy.y());
    sum.steps = k + 1;
    if (env.terminated()) {
      sum.terminated = true;
      break;
    }
  }
  const double n = std::max(1, sum.steps);
  sum.rms_err_vx = std::sqrt(se_vx / n);
  sum.rms_err_vy = std::sqrt(se_vy / n);
  sum.rms_err_wz = std::sqrt(se_wz / n);
  sum.rms_vz = std::sqrt(se_vz / n);
  sum.rms_roll = std::sqrt(se_roll / n);
  sum.rms_pitch = std::sqrt(se_pitch / n);
  return sum;
}

inline int cmd_eval(const std::string& checkpoint, const std::string& scenario_text,
                    const std::string& out_dir, double duration) {
  std::filesystem::create_directories(out_dir);
  const DeployedPolicy dp = DeployedPolicy::load(checkpoint);
  const EvalScenario scenario = EvalScenario::parse(scenario_text);
  std::ofstream traj(out_dir + "/trajectory.csv");
  const EvalSummary sum = run_eval(dp, scenario, duration, &traj);
  std::ostringstream report;
  report << "steps: " << sum.steps << (sum.terminated ? " (terminated early)" : "") << "\n"
         << "rms_err_vx: " << sum.rms_err_vx << " m/s\n"
         << "rms_err_vy: " << sum.rms_err_vy << " m/s\n"
         << "rms_err_wz: " << sum.rms_err_wz << " rad/s\n"
         << "rms_vz: " << sum.rms_vz << " m/s\n"
         << "rms_roll: " << sum.rms_roll << " rad\n"
         << "rms_pitch: " << sum.rms_pitch << " rad\n";
  std::ofstream summary(out_dir + "/summary.txt");
  summary << report.str();
  std::cout << report.str();
  return 0;
}

// ---- disturb ---------------------------------------------------------------

/// True when the policy survives 10 s with `magnitude` m/s velocity kicks
/// along `axis` once per second.
inline bool survives_disturbance(const DeployedPolicy& dp, int axis, double magnitude) {
  const RobotModel model = default_model();
  EnvConfig env_cfg;
  env_cfg.randomize = false;
  env_cfg.episode_length_s = 11.0;
  TerrainPool pool({TerrainKind::flat}, 1.0, 7);
  HexEnv env(model, env_cfg, pool, Rng(7));
  env.reset();
  env.set_command({0.0, 0.0, 0.0});

  const int steps = static_cast<int>(10.0 / kControlDt + 0.5);
  for (int k = 0; k < steps; ++k) {
    if (k > 0 && k % 50 == 0) env.apply_perturbation_now(axis, magnitude);
    Eigen::MatrixXd hist = env.history();
    Eigen::MatrixXd cmd = env.command();
    Eigen::MatrixXd a_prev = env.prev_action();
    const PolicyForward pf = policy_forward(dp.policy, hist, cmd, a_prev);
    env.step_control(pf.mean.col(0));
    env.finish_step(pf.mean.col(0), 0.0);
    if (env.terminated()) return false;
  }
  return true;
}

/// Bisection (0.01 m/s resolution) for the largest survivable kick in one
/// direction.
inline double disturbance_tolerance(const DeployedPolicy& dp, int axis, double sign) {
  if (!survives_disturbance(dp, axis, sign * 0.01)) return 0.0;
  double lo = 0.01, hi = 5.0;
  if (survives_disturbance(dp, axis, sign * hi)) return hi;
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    if (survives_disturbance(dp, axis, sign * mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline int cmd_disturb(const std::string& checkpoint, const std::string& axis_name) {
  const DeployedPolicy dp = DeployedPolicy::load(checkpoint);
  int axis = -1;
  if (axis_name == "x") axis = 0;
  else if (axis_name == "y") axis = 1;
  else if (axis_name == "z") axis = 2;
  else throw std::invalid_argument("axis must be x, y, or z");
  const double pos = disturbance_tolerance(dp, axis, +1.0);
  const double neg = disturbance_tolerance(dp, axis, -1.0);
  const double m = std::floor(std::min(pos, neg) * 100.0 + 0.5) / 100.0;
  std::cout << "axis " << axis_name << " tolerance: [" << -m << ", " << m << "] m/s\n";
  return 0;
}

// ---- ablate ----------------------------------------------------------------

struct AblationArm {
  std::string name;
  bool task, style, penalty;
};

inline const std::vector<AblationArm>& ablation_arms() {
  static const std::vector<AblationArm> arms = {
      {"task_style", true, true, false},
      {"task_penalty", true, false, true},
      {"full", true, true, true},
  };
  return arms;
}

inline int cmd_ablate(const RunConfig& base_cfg, const std::vector<std::uint64_t>& seeds) {
  std::filesystem::create_directories(base_cfg.out_dir);
  const std::string data_path = dataset_path_of(base_cfg);
  if (!std::filesystem::exists(data_path))
    throw std::runtime_error("dataset '" + data_path + "' not found; run gen-priors first");
  const PriorDataset dataset = load_dataset(data_path);
  const RobotModel model = default_model();
  write_config_echo(base_cfg, base_cfg.out_dir);

  std::ofstream csv(base_cfg.out_dir + "/ablate_report.csv");
  csv << "arm,seed,iteration,mean_total_reward,mean_task,mean_style,mean_penalty,"
         "mean_terrain_level\n";

  const int iters = base_cfg.train.max_iterations;
  std::map<std::string, std::vector<double>> style_curve, level_curve;
  for (const AblationArm& arm : ablation_arms()) {
    style_curve[arm.name].assign(iters, 0.0);
    level_curve[arm.name].assign(iters, 0.0);
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base_cfg;
      cfg.reward.enable_task = arm.task;
      cfg.reward.enable_style = arm.style;
      cfg.reward.enable_penalty = arm.penalty;
      Trainer trainer(model, cfg.train, cfg.env_config(), dataset, seed);
      const auto rows = trainer.run();
      for (const auto& row : rows) {
        csv << arm.name << ',' << seed << ',' << row.iteration << ',' << row.mean_total_reward
            << ',' << row.mean_task << ',' << row.mean_style << ',' << row.mean_penalty << ','
            << row.mean_terrain_level << "\n";
        style_curve[arm.name][row.iteration] += row.mean_style / seeds.size();
        level_curve[arm.name][row.iteration] += row.mean_terrain_level / seeds.size();
      }
      csv.flush();
      if (log_level() > 0)
        std::cout << "arm " << arm.name << " seed " << seed << " done\n";
    }
  }

  SvgChart chart("Reward-combination ablation", "iteration", "mean style reward / terrain level");
  for (const AblationArm& arm : ablation_arms()) {
    chart.add_series("style " + arm.name, style_curve[arm.name]);
    chart.add_series("level " + arm.name, level_curve[arm.name]);
  }
  chart.save(base_cfg.out_dir + "/ablate_chart.svg");
  std::cout << "report: " << base_cfg.out_dir << "/ablate_report.csv\n";
  return 0;
}

}  // namespace hexamp
