#pragma once

#include <cmath>
#include <vector>

#include "hydrosim/planner/collision.hpp"
#include "hydrosim/planner/distance_field.hpp"
#include "hydrosim/planner/types.hpp"

namespace hydrosim::planner {

namespace detail {

inline void refresh_geometry(Trajectory& t) {
  auto& p = t.poses;
  const std::size_t n = p.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 d = p[i + 1].position() - p[i - 1].position();
    if (d.norm() > 0.0) p[i].theta = std::atan2(d.y, d.x);
  }
  t.curvatures.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 a = p[i].position() - p[i - 1].position();
    const Vec2 b = p[i + 1].position() - p[i].position();
    const double len = b.norm();
    if (a.norm() == 0.0 || len == 0.0) continue;
    t.curvatures[i] = heading_difference(std::atan2(b.y, b.x), std::atan2(a.y, a.x)) / len;
  }
}

}  // namespace detail

/// Laplacian relaxation p_i += alpha (p_{i-1} + p_{i+1} - 2 p_i) with fixed
/// endpoints. Returns the input untouched when any iteration collides, or
/// when the result would turn more or exceed `max_curvature`.
inline Trajectory smooth(const Trajectory& traj, const CollisionChecker& checker, int iterations, double alpha,
                         double max_curvature) {
  if (traj.poses.size() < 3 || iterations <= 0 || alpha <= 0.0) return traj;

  Trajectory work = traj;
  std::vector<Vec2> next(work.poses.size());
  for (int it = 0; it < iterations; ++it) {
    const auto& p = work.poses;
    next.front() = p.front().position();
    next.back() = p.back().position();
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      const Vec2 lap = p[i - 1].position() + p[i + 1].position() - 2.0 * p[i].position();
      next[i] = p[i].position() + alpha * lap;
    }
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      if (!checker.segment_free(next[i - 1], next[i]) || !checker.segment_free(next[i], next[i + 1])) return traj;
    }
    for (std::size_t i = 1; i + 1 < work.poses.size(); ++i) {
      work.poses[i].x = next[i].x;
      work.poses[i].y = next[i].y;
    }
  }
  detail::refresh_geometry(work);

  if (total_turning(work.poses) > total_turning(traj.poses) + 1e-12) return traj;
  for (double k : work.curvatures)
    if (std::abs(k) > max_curvature + 1e-9) return traj;
  return work;
}

/// Same relaxation with the footprint and curvature bound taken from the
/// planner parameters.
inline Trajectory smooth(const Trajectory& traj, const world::OccupancyGrid& grid, int iterations, double alpha,
                         const PlannerParams& params = {}) {
  if (traj.poses.size() < 3) return traj;
  const DistanceField field = distance_field(grid);
  const CollisionChecker checker(grid, field, params.footprint_radius);
  return smooth(traj, checker, iterations, alpha, params.max_curvature());
}

}  // namespace hydrosim::planner
