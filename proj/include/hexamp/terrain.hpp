#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hexamp/math.hpp"

namespace hexamp {

enum class TerrainKind { flat, smooth_slope, rough_slope, stairs_up, stairs_down };

inline const char* terrain_kind_name(TerrainKind k) {
  switch (k) {
    case TerrainKind::flat: return "flat";
    case TerrainKind::smooth_slope: return "smooth_slope";
    case TerrainKind::rough_slope: return "rough_slope";
    case TerrainKind::stairs_up: return "stairs_up";
    case TerrainKind::stairs_down: return "stairs_down";
  }
  return "?";
}

inline TerrainKind terrain_kind_from_name(const std::string& s) {
  if (s == "flat") return TerrainKind::flat;
  if (s == "smooth_slope") return TerrainKind::smooth_slope;
  if (s == "rough_slope") return TerrainKind::rough_slope;
  if (s == "stairs_up") return TerrainKind::stairs_up;
  if (s == "stairs_down") return TerrainKind::stairs_down;
  throw std::invalid_argument("unknown terrain kind '" + s + "'");
}

/// Square heightfield arena at 0.05 m grid resolution, centered on the
/// origin. Lookups are defined over the whole plane (clamped at the rim).
struct Terrain {
  TerrainKind kind = TerrainKind::flat;
  int difficulty_level = 0;  // 0..9
  double friction = 1.0;
  double cell = 0.05;   // m per grid cell
  double extent = 10.0; // arena side length, m
  int n = 201;          // grid points per side
  Eigen::MatrixXd heightfield;  // n x n

  double height(double x, double y) const {
    const double half = extent / 2.0;
    const double gx = clamp((x + half) / cell, 0.0, static_cast<double>(n - 1));
    const double gy = clamp((y + half) / cell, 0.0, static_cast<double>(n - 1));
    const int ix = std::min(static_cast<int>(gx), n - 2);
    const int iy = std::min(static_cast<int>(gy), n - 2);
    const double fx = gx - ix;
    const double fy = gy - iy;
    return heightfield(ix, iy) * (1 - fx) * (1 - fy) +
           heightfield(ix + 1, iy) * fx * (1 - fy) +
           heightfield(ix, iy + 1) * (1 - fx) * fy +
           heightfield(ix + 1, iy + 1) * fx * fy;
  }
};

/// Build a terrain variant. Difficulty scales slope angle / stair rise.
/// Slopes and stairs radiate outward from a 1 m flat spawn platform.
inline Terrain make_terrain(TerrainKind kind, int level, std::uint64_t seed,
                            double friction = 1.0, double extent = 10.0) {
  if (level < 0 || level > 9) throw std::invalid_argument("terrain level out of 0..9");
  Terrain t;
  t.kind = kind;
  t.difficulty_level = level;
  t.friction = friction;
  t.extent = extent;
  t.n = static_cast<int>(std::lround(extent / t.cell)) + 1;
  t.heightfield.setZero(t.n, t.n);
  if (kind == TerrainKind::flat) return t;

  const double platform = 1.0;
  const double slope = std::tan((4.0 + 2.6 * level) * kPi / 180.0);
  const double rise = 0.03 + 0.015 * level;  // uniform rise per stair
  const double tread = 0.30;
  Rng rng(split_seed(seed, 0x7e22));
  const double rough_amp = 0.01 + 0.006 * level;

  const double half = extent / 2.0;
  for (int i = 0; i < t.n; ++i) {
    for (int j = 0; j < t.n; ++j) {
      const double x = -half + i * t.cell;
      const double y = -half + j * t.cell;
      const double r = std::max(std::abs(x), std::abs(y));
      const double d = std::max(0.0, r - platform);
      double h = 0.0;
      switch (kind) {
        case TerrainKind::smooth_slope:
          h = slope * d;
          break;
        case TerrainKind::rough_slope:
          h = slope * d + (d > 0 ? rng.uniform(-rough_amp, rough_amp) : 0.0);
          break;
        case TerrainKind::stairs_up:
          h = rise * std::floor(d / tread);
          break;
        case TerrainKind::stairs_down:
          h = -rise * std::floor(d / tread);
          break;
        case TerrainKind::flat:
          break;
      }
      t.heightfield(i, j) = h;
    }
  }
  return t;
}

}  // namespace hexamp
