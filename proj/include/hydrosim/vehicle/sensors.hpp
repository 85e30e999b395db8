#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"
#include "hydrosim/core/rng.hpp"
#include "hydrosim/vehicle/dynamics.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace hydrosim::vehicle {

struct RayHit {
  double range = 0.0;  ///< m; meaningless without a hit
  bool hit = false;
  Vec2 point;          ///< entry point on the hit cell, local frame
};

/// Grid traversal from `from` along world heading `angle`; stops at the
/// first non-free in-grid cell or after `max_range` metres. Leaving the grid
/// is a miss.
inline RayHit cast_ray(const world::OccupancyGrid& grid, Vec2 from, double angle, double max_range) {
  const double res = grid.resolution();
  const Vec2 g = grid.to_grid_coords(from);
  const double a = angle - grid.origin().theta;
  const double dx = std::cos(a), dy = std::sin(a);
  int i = static_cast<int>(std::floor(g.x));
  int j = static_cast<int>(std::floor(g.y));
  RayHit out;
  if (!grid.in_bounds(i, j)) return out;
  if (grid.at(i, j) != world::Cell::Free) return {0.0, true, from};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_i = dx > 0 ? 1 : -1;
  const int step_j = dy > 0 ? 1 : -1;
  double t_max_x = dx == 0.0 ? kInf : (dx > 0 ? (i + 1 - g.x) : (g.x - i)) / std::abs(dx);
  double t_max_y = dy == 0.0 ? kInf : (dy > 0 ? (j + 1 - g.y) : (g.y - j)) / std::abs(dy);
  const double t_dx = dx == 0.0 ? kInf : 1.0 / std::abs(dx);
  const double t_dy = dy == 0.0 ? kInf : 1.0 / std::abs(dy);
  const double t_limit = max_range / res;

  while (true) {
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_dx;
      i += step_i;
    } else {
      t = t_max_y;
      t_max_y += t_dy;
      j += step_j;
    }
    if (t > t_limit || !grid.in_bounds(i, j)) return out;
    if (grid.at(i, j) != world::Cell::Free) {
      out.hit = true;
      out.range = t * res;
      out.point = grid.from_grid_coords({g.x + t * dx, g.y + t * dy});
      return out;
    }
  }
}

/// Planar scan with beams evenly spaced from the vehicle heading. Misses
/// read r_max; hits closer than r_min read r_min.
inline std::vector<double> raycast_lidar(const Pose2& pose, const world::OccupancyGrid& grid, int n_beams,
                                         double r_max = 12.0, double r_min = 0.12) {
  if (!grid.contains(pose.position())) throw Error(Errc::PoseOutOfBounds, "lidar pose outside grid");
  std::vector<double> ranges(static_cast<std::size_t>(std::max(0, n_beams)), r_max);
  for (int k = 0; k < n_beams; ++k) {
    const double angle = pose.theta + 2.0 * std::numbers::pi * k / n_beams;
    const RayHit h = cast_ray(grid, pose.position(), angle, r_max);
    if (h.hit) ranges[static_cast<std::size_t>(k)] = std::clamp(h.range, r_min, r_max);
  }
  return ranges;
}

struct RoiParams {
  double halfwidth = 0.6;  ///< m either side of the heading axis
  double threshold = 3.0;  ///< m
  double max_range = 10.0;
  double min_range = 0.5;
};

struct RoiResult {
  bool flag = false;
  double min_range = 10.0;
  std::optional<Vec2> nearest;  ///< local-frame point of the closest return
};

/// Forward corridor of parallel rays no further apart than half a cell.
inline RoiResult roi_obstacle(const Pose2& pose, const world::OccupancyGrid& grid, const RoiParams& p = {}) {
  if (!(p.threshold >= p.min_range && p.threshold <= p.max_range))
    throw Error(Errc::ConfigInvalid, "roi threshold outside sensing span");
  RoiResult out;
  out.min_range = p.max_range;
  const double spacing = 0.5 * grid.resolution();
  const int n = std::max(1, static_cast<int>(std::ceil(2.0 * p.halfwidth / spacing)));
  const Vec2 left{-std::sin(pose.theta), std::cos(pose.theta)};
  for (int k = 0; k <= n; ++k) {
    const double offset = -p.halfwidth + 2.0 * p.halfwidth * k / n;
    const RayHit h = cast_ray(grid, pose.position() + offset * left, pose.theta, p.max_range);
    if (!h.hit) continue;
    const double r = std::max(h.range, p.min_range);
    if (r < out.min_range) {
      out.min_range = r;
      out.nearest = h.point;
    }
  }
  out.flag = out.min_range < p.threshold;
  return out;
}

struct SensorNoise {
  double gnss_sigma = 0.02;     ///< m per axis (RTK fix)
  double gyro_sigma = 0.005;    ///< rad/s
  double accel_sigma = 0.02;    ///< m/s^2
};

template <class Rng>
Vec2 gnss_measurement(const TrueState& s, const SensorNoise& n, Rng& rng) {
  const double ex = gaussian(rng, n.gnss_sigma);
  const double ey = gaussian(rng, n.gnss_sigma);
  return {s.pose.x + ex, s.pose.y + ey};
}

/// Yaw rate and forward acceleration over the last step.
template <class Rng>
std::pair<double, double> imu_measurement(const TrueState& prev, const TrueState& now, double dt,
                                          const SensorNoise& n, Rng& rng) {
  const double g = gaussian(rng, n.gyro_sigma);
  const double a = gaussian(rng, n.accel_sigma);
  const double yaw_rate = heading_difference(now.pose.theta, prev.pose.theta) / dt + g;
  return {yaw_rate, (now.v - prev.v) / dt + a};
}

inline nlohmann::json sensor_noise_to_json(const SensorNoise& n) {
  return {{"gnss_sigma", n.gnss_sigma}, {"gyro_sigma", n.gyro_sigma}, {"accel_sigma", n.accel_sigma}};
}

inline SensorNoise sensor_noise_from_json(const nlohmann::json& j, SensorNoise n = {}) {
  try {
    n.gnss_sigma = j.value("gnss_sigma", n.gnss_sigma);
    n.gyro_sigma = j.value("gyro_sigma", n.gyro_sigma);
    n.accel_sigma = j.value("accel_sigma", n.accel_sigma);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("sensors: ") + e.what());
  }
  if (!(n.gnss_sigma >= 0) || !(n.gyro_sigma >= 0) || !(n.accel_sigma >= 0))
    throw Error(Errc::ConfigInvalid, "sensors: sigmas must be >= 0");
  return n;
}

}  // namespace hydrosim::vehicle
