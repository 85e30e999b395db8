#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"
#include "hydrosim/world/edges.hpp"
#include "hydrosim/world/image.hpp"
#include "hydrosim/world/morphology.hpp"

namespace hydrosim::world {

enum class Cell : std::uint8_t { Free = 0, Occupied = 1, Unknown = 2 };

struct CellIndex {
  int i = 0;  ///< column, along local x
  int j = 0;  ///< row, along local y
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Rasterized world. Cell (i, j) spans [i, i+1) x [j, j+1) in grid units
/// measured from `origin`, rotated by origin.theta.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, Pose2 origin = {}, Cell fill = Cell::Free)
      : width_(width), height_(height), resolution_(resolution), origin_(origin),
        cells_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 1 || height < 1) throw Error(Errc::ConfigInvalid, "grid dimensions must be positive");
    if (!(resolution > 0.0)) throw Error(Errc::ConfigInvalid, "grid resolution must be > 0");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  const Pose2& origin() const { return origin_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<Cell>& cells() const { return cells_; }

  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width_ && j < height_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * width_ + i; }

  Cell at(int i, int j) const { return cells_[index(i, j)]; }
  void set(int i, int j, Cell c) { cells_[index(i, j)] = c; }

  /// Unknown and out-of-bounds cells count as blocked.
  bool blocked(int i, int j) const { return !in_bounds(i, j) || at(i, j) != Cell::Free; }

  /// Continuous grid coordinates (cell units) of a local-frame point.
  Vec2 to_grid_coords(Vec2 p) const {
    const double dx = p.x - origin_.x;
    const double dy = p.y - origin_.y;
    const double c = std::cos(origin_.theta);
    const double s = std::sin(origin_.theta);
    return {(c * dx + s * dy) / resolution_, (-s * dx + c * dy) / resolution_};
  }

  Vec2 from_grid_coords(Vec2 g) const {
    const double c = std::cos(origin_.theta);
    const double s = std::sin(origin_.theta);
    const double gx = g.x * resolution_;
    const double gy = g.y * resolution_;
    return {origin_.x + c * gx - s * gy, origin_.y + s * gx + c * gy};
  }

  CellIndex cell_of(Vec2 p) const {
    const Vec2 g = to_grid_coords(p);
    return {static_cast<int>(std::floor(g.x)), static_cast<int>(std::floor(g.y))};
  }

  std::optional<CellIndex> world_to_cell(Vec2 p) const {
    const CellIndex c = cell_of(p);
    if (!in_bounds(c.i, c.j)) return std::nullopt;
    return c;
  }

  Vec2 cell_center(int i, int j) const { return from_grid_coords({i + 0.5, j + 0.5}); }

  bool contains(Vec2 p) const {
    const CellIndex c = cell_of(p);
    return in_bounds(c.i, c.j);
  }

  std::size_t count(Cell c) const {
    std::size_t n = 0;
    for (auto v : cells_) n += v == c;
    return n;
  }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Pose2 origin_{};
  std::vector<Cell> cells_;
};

/// Set mask pixels become Occupied, all others Free. Pixel (x, y) maps to
/// cell (x, y).
inline OccupancyGrid to_grid(const BinaryMask& mask, double resolution, Pose2 origin = {}) {
  if (!(resolution > 0.0)) throw Error(Errc::ConfigInvalid, "resolution must be > 0");
  OccupancyGrid grid(mask.width, mask.height, resolution, origin);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.test(x, y)) grid.set(x, y, Cell::Occupied);
  return grid;
}

struct PreprocessParams {
  CannyParams canny{};
  int erode_radius = 1;  ///< free-space erosion, in cells
  double resolution = 0.25;
  Pose2 origin{};
};

/// Map image -> occupancy grid: edges become obstacles, then free space is
/// eroded so obstacles grow by `erode_radius` cells.
inline OccupancyGrid preprocess_map(const GrayImage& img, const PreprocessParams& params) {
  const BinaryMask edges = extract_edges(img, params.canny);
  const BinaryMask free_space = erode(complement(edges), params.erode_radius);
  return to_grid(complement(free_space), params.resolution, params.origin);
}

// JSON form: {width, height, resolution, origin:{x,y,theta}, cells:[[value, run], ...]}
// with value 0 = Free, 1 = Occupied, 2 = Unknown, runs in row-major order.

inline nlohmann::json grid_to_json(const OccupancyGrid& g) {
  nlohmann::json runs = nlohmann::json::array();
  const auto& cells = g.cells();
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j] == cells[i]) ++j;
    runs.push_back({static_cast<int>(cells[i]), j - i});
    i = j;
  }
  return {{"width", g.width()},
          {"height", g.height()},
          {"resolution", g.resolution()},
          {"origin", {{"x", g.origin().x}, {"y", g.origin().y}, {"theta", g.origin().theta}}},
          {"cells", std::move(runs)}};
}

inline OccupancyGrid grid_from_json(const nlohmann::json& j) {
  try {
    const Pose2 origin{j.at("origin").value("x", 0.0), j.at("origin").value("y", 0.0),
                       j.at("origin").value("theta", 0.0)};
    OccupancyGrid g(j.at("width").get<int>(), j.at("height").get<int>(), j.at("resolution").get<double>(), origin);
    std::size_t pos = 0;
    for (const auto& run : j.at("cells")) {
      const int value = run.at(0).get<int>();
      const auto n = run.at(1).get<std::size_t>();
      if (value < 0 || value > 2) throw Error(Errc::MapLoadFailed, "bad cell value");
      if (pos + n > g.size()) throw Error(Errc::MapLoadFailed, "runs exceed grid size");
      for (std::size_t k = 0; k < n; ++k, ++pos)
        g.set(static_cast<int>(pos % g.width()), static_cast<int>(pos / g.width()), static_cast<Cell>(value));
    }
    if (pos != g.size()) throw Error(Errc::MapLoadFailed, "runs do not cover grid");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MapLoadFailed, e.what());
  }
}

}  // namespace hydrosim::world
