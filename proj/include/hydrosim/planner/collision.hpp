#pragma once

#include <cmath>

#include "hydrosim/core/geometry.hpp"
#include "hydrosim/planner/distance_field.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace hydrosim::planner {

/// Disk-footprint collision test against blocked cells (Occupied, Unknown,
/// or outside the grid).
class CollisionChecker {
 public:
  CollisionChecker(const world::OccupancyGrid& grid, const DistanceField& field, double radius)
      : grid_(grid), field_(field), radius_(radius) {}

  double radius() const { return radius_; }

  bool pose_free(Vec2 p) const {
    const double res = grid_.resolution();
    const Vec2 g = grid_.to_grid_coords(p);
    const int ci = static_cast<int>(std::floor(g.x));
    const int cj = static_cast<int>(std::floor(g.y));
    if (grid_.blocked(ci, cj)) return false;
    // any point of this cell is within sqrt(2)/2 res of its centre, and the
    // nearest blocked square is within sqrt(2)/2 res of that cell's centre
    if (field_.at(ci, cj) - std::sqrt(2.0) * res > radius_) return true;

    const double r = radius_ / res;
    const int i0 = static_cast<int>(std::floor(g.x - r));
    const int i1 = static_cast<int>(std::floor(g.x + r));
    const int j0 = static_cast<int>(std::floor(g.y - r));
    const int j1 = static_cast<int>(std::floor(g.y + r));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        if (!grid_.blocked(i, j)) continue;
        const double dx = g.x < i ? i - g.x : (g.x > i + 1 ? g.x - (i + 1) : 0.0);
        const double dy = g.y < j ? j - g.y : (g.y > j + 1 ? g.y - (j + 1) : 0.0);
        if (dx * dx + dy * dy < r * r) return false;
      }
    }
    return true;
  }

  /// Samples the segment no coarser than half a cell.
  bool segment_free(Vec2 a, Vec2 b) const {
    const double len = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / (0.5 * grid_.resolution()))));
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      if (!pose_free(a + t * (b - a))) return false;
    }
    return true;
  }

 private:
  const world::OccupancyGrid& grid_;
  const DistanceField& field_;
  double radius_;
};

}  // namespace hydrosim::planner
