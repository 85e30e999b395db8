#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hydrosim/core/error.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace hydrosim::planner {

/// Per-cell Euclidean distance (metres) from the cell centre to the
/// nearest blocked cell centre. Blocked cells hold 0; a grid without
/// obstacles holds the grid diagonal everywhere.
struct DistanceField {
  int width = 0;
  int height = 0;
  double resolution = 1.0;
  std::vector<double> values;

  double at(int i, int j) const {
    if (i < 0 || j < 0 || i >= width || j >= height) return 0.0;
    return values[static_cast<std::size_t>(j) * width + i];
  }
};

namespace detail {

// Lower envelope of parabolas over squared distances along one line.
// "Infinite" entries use a large finite sentinel so the envelope stays
// well defined.
inline constexpr double kFar = 1e12;

inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + 1.0 * q * q) - (f[v[k]] + 1.0 * v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + 1.0 * q * q) - (f[v[k]] + 1.0 * v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = q - v[k];
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace detail

/// Exact Euclidean distance transform: a column pass then a row pass of
/// the 1-D squared-distance transform.
inline DistanceField distance_field(const world::OccupancyGrid& grid) {
  const int w = grid.width();
  const int h = grid.height();
  if (grid.count(world::Cell::Free) == 0) throw Error(Errc::AllOccupied, "grid has no free cell");

  std::vector<double> sq(static_cast<std::size_t>(w) * h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) sq[grid.index(i, j)] = grid.blocked(i, j) ? 0.0 : detail::kFar;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  f.resize(h);
  d.resize(h);
  for (int i = 0; i < w; ++i) {
    for (int j = 0; j < h; ++j) f[j] = sq[grid.index(i, j)];
    detail::edt_1d(f, d, v, z);
    for (int j = 0; j < h; ++j) sq[grid.index(i, j)] = d[j];
  }
  f.resize(w);
  d.resize(w);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) f[i] = sq[grid.index(i, j)];
    detail::edt_1d(f, d, v, z);
    for (int i = 0; i < w; ++i) sq[grid.index(i, j)] = d[i];
  }

  DistanceField out{w, h, grid.resolution(), {}};
  out.values.resize(sq.size());
  const double cap = grid.resolution() * std::hypot(static_cast<double>(w), static_cast<double>(h));
  for (std::size_t k = 0; k < sq.size(); ++k)
    out.values[k] = sq[k] >= detail::kFar / 2 ? cap : std::min(cap, grid.resolution() * std::sqrt(sq[k]));
  return out;
}

}  // namespace hydrosim::planner
