#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hexamp/env.hpp"
#include "hexamp/priors.hpp"
#include "hexamp/rl.hpp"
#include "hexamp/terrain.hpp"

namespace hexamp {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Everything a run needs; a run is reproducible from this plus the seed.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string dataset_path;  // empty: <out_dir>/priors.ampd
  bool single_thread = false;

  std::vector<TerrainKind> terrain_kinds = {TerrainKind::flat};
  double terrain_friction = 1.0;

  GaitParams gait;
  double segment_duration = 8.6;

  RewardConfig reward;
  TrainConfig train;
  CommandRanges commands;
  double episode_length_s = 10.0;
  bool randomize = true;

  EnvConfig env_config() const {
    EnvConfig e;
    e.terrain_kinds = terrain_kinds;
    e.terrain_friction = terrain_friction;
    e.commands = commands;
    e.episode_length_s = episode_length_s;
    e.randomize = randomize;
    e.reward = reward;
    return e;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad number '" + v + "'");
  return d;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad bool '" + v + "'");
}

inline Eigen::Vector2d parse_range(const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) throw std::invalid_argument("range needs two values");
  return {parse_double(parts[0]), parse_double(parts[1])};
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Entry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, Entry>& config_entries() {
  static const std::map<std::string, Entry> entries = [] {
    std::map<std::string, Entry> m;
    auto num = [&m](const std::string& key, auto member) {
      m[key] = Entry{[member](RunConfig& c, const std::string& v) { c.*member = parse_double(v); },
                     [member](const RunConfig& c) { return fmt(c.*member); }};
    };
    auto num_in = [&m](const std::string& key, auto outer, auto member) {
      m[key] = Entry{
          [outer, member](RunConfig& c, const std::string& v) { (c.*outer).*member = parse_double(v); },
          [outer, member](const RunConfig& c) { return fmt((c.*outer).*member); }};
    };
    auto int_in = [&m](const std::string& key, auto outer, auto member) {
      m[key] = Entry{[outer, member](RunConfig& c, const std::string& v) {
                       (c.*outer).*member = static_cast<int>(parse_double(v));
                     },
                     [outer, member](const RunConfig& c) {
                       return std::to_string((c.*outer).*member);
                     }};
    };
    auto boolean = [&m](const std::string& key, auto member) {
      m[key] = Entry{[member](RunConfig& c, const std::string& v) { c.*member = parse_bool(v); },
                     [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
    };
    auto range_in = [&m](const std::string& key, auto outer, auto member) {
      m[key] = Entry{
          [outer, member](RunConfig& c, const std::string& v) { (c.*outer).*member = parse_range(v); },
          [outer, member](const RunConfig& c) {
            const Eigen::Vector2d r = (c.*outer).*member;
            return fmt(r[0]) + "," + fmt(r[1]);
          }};
    };

    m["run.seed"] = Entry{
        [](RunConfig& c, const std::string& v) { c.seed = std::stoull(v); },
        [](const RunConfig& c) { return std::to_string(c.seed); }};
    m["run.out_dir"] = Entry{[](RunConfig& c, const std::string& v) { c.out_dir = v; },
                             [](const RunConfig& c) { return c.out_dir; }};
    m["run.dataset"] = Entry{[](RunConfig& c, const std::string& v) { c.dataset_path = v; },
                             [](const RunConfig& c) { return c.dataset_path; }};
    boolean("run.single_thread", &RunConfig::single_thread);

    m["terrain.kinds"] = Entry{
        [](RunConfig& c, const std::string& v) {
          c.terrain_kinds.clear();
          for (const auto& name : split_list(v)) c.terrain_kinds.push_back(terrain_kind_from_name(name));
          if (c.terrain_kinds.empty()) throw std::invalid_argument("no terrain kinds");
        },
        [](const RunConfig& c) {
          std::string out;
          for (const auto& k : c.terrain_kinds) {
            if (!out.empty()) out += ",";
            out += terrain_kind_name(k);
          }
          return out;
        }};
    num("terrain.friction", &RunConfig::terrain_friction);

    num_in("gait.period", &RunConfig::gait, &GaitParams::period);
    num_in("gait.duty_factor", &RunConfig::gait, &GaitParams::duty_factor);
    num_in("gait.step_height", &RunConfig::gait, &GaitParams::step_height);
    num_in("gait.base_height", &RunConfig::gait, &GaitParams::base_height);
    num("gait.segment_duration", &RunConfig::segment_duration);

    m["rewards.mask"] = Entry{
        [](RunConfig& c, const std::string& v) {
          c.reward.enable_task = c.reward.enable_style = c.reward.enable_penalty = false;
          for (const auto& g : split_list(v)) {
            if (g == "task") c.reward.enable_task = true;
            else if (g == "style") c.reward.enable_style = true;
            else if (g == "penalty") c.reward.enable_penalty = true;
            else throw std::invalid_argument("unknown reward group '" + g + "'");
          }
        },
        [](const RunConfig& c) {
          std::string out;
          if (c.reward.enable_task) out += "task";
          if (c.reward.enable_style) out += out.empty() ? "style" : ",style";
          if (c.reward.enable_penalty) out += out.empty() ? "penalty" : ",penalty";
          return out;
        }};
    num_in("rewards.tracking_sigma", &RunConfig::reward, &RewardConfig::tracking_sigma);
    num_in("rewards.torque_limit", &RunConfig::reward, &RewardConfig::torque_limit);
    num_in("rewards.joint_vel_limit", &RunConfig::reward, &RewardConfig::joint_vel_limit);
    num_in("rewards.contact_force_limit", &RunConfig::reward, &RewardConfig::contact_force_limit);

    num_in("train.gamma", &RunConfig::train, &TrainConfig::gamma);
    num_in("train.lambda", &RunConfig::train, &TrainConfig::lam);
    num_in("train.clip", &RunConfig::train, &TrainConfig::clip);
    int_in("train.epochs", &RunConfig::train, &TrainConfig::epochs);
    int_in("train.minibatches", &RunConfig::train, &TrainConfig::minibatches);
    num_in("train.value_coef", &RunConfig::train, &TrainConfig::value_coef);
    num_in("train.entropy_coef", &RunConfig::train, &TrainConfig::entropy_coef);
    num_in("train.estimator_coef", &RunConfig::train, &TrainConfig::estimator_coef);
    num_in("train.lr", &RunConfig::train, &TrainConfig::lr);
    num_in("train.kl_target", &RunConfig::train, &TrainConfig::kl_target);
    int_in("train.horizon", &RunConfig::train, &TrainConfig::horizon);
    int_in("train.env_count", &RunConfig::train, &TrainConfig::env_count);
    int_in("train.max_iterations", &RunConfig::train, &TrainConfig::max_iterations);
    int_in("train.disc_updates", &RunConfig::train, &TrainConfig::disc_updates);
    int_in("train.disc_batch", &RunConfig::train, &TrainConfig::disc_batch);
    num_in("train.disc_lr", &RunConfig::train, &TrainConfig::disc_lr);
    int_in("train.disc_warmup_updates", &RunConfig::train, &TrainConfig::disc_warmup_updates);
    num_in("train.alpha_gp", &RunConfig::train, &TrainConfig::alpha_gp);
    int_in("train.checkpoint_interval", &RunConfig::train, &TrainConfig::checkpoint_interval);
    num("train.episode_length_s", &RunConfig::episode_length_s);
    boolean("train.randomize", &RunConfig::randomize);
    range_in("train.cmd_vx", &RunConfig::commands, &CommandRanges::vx);
    range_in("train.cmd_vy", &RunConfig::commands, &CommandRanges::vy);
    range_in("train.cmd_wz", &RunConfig::commands, &CommandRanges::wz);
    return m;
  }();
  return entries;
}

}  // namespace detail

inline void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                              const std::string& value, const std::string& where) {
  const auto& entries = detail::config_entries();
  const auto it = entries.find(section + "." + key);
  if (it == entries.end())
    throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
  try {
    it->second.set(cfg, value);
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// Flat key-value config with [section] headers and '#' comments.
inline RunConfig parse_config(std::istream& is, const std::string& filename = "<config>") {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = filename + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + ": key before any [section]");
    apply_config_line(cfg, section, key, value, where);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(is, path);
}

/// Serializes the resolved config; parsing the echo reproduces it exactly.
inline std::string echo_config(const RunConfig& cfg) {
  const auto& entries = detail::config_entries();
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  for (const auto& [full_key, entry] : entries) {
    const auto dot = full_key.find('.');
    by_section[full_key.substr(0, dot)].push_back({full_key.substr(dot + 1), entry.get(cfg)});
  }
  std::ostringstream os;
  for (const auto& [section, keys] : by_section) {
    os << "[" << section << "]\n";
    for (const auto& [key, value] : keys) os << key << " = " << value << "\n";
    os << "\n";
  }
  return os.str();
}

}  // namespace hexamp
