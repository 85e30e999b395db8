// Independent reference implementations used to freeze and cross-check
// expected values. None of these call into the code path they verify.
#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "hydrosim/world/image.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace oracle {

using hydrosim::world::BinaryMask;
using hydrosim::world::GrayImage;

/// Pixel stays set iff every pixel of its (2r+1)^2 window exists and is set.
inline BinaryMask brute_force_erode(const BinaryMask& m, int r) {
  BinaryMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool keep = true;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!m.in_bounds(nx, ny) || !m.test(nx, ny)) keep = false;
        }
      out.set(x, y, keep);
    }
  return out;
}

/// Unblurred central-difference gradient magnitude above a threshold.
inline BinaryMask gradient_threshold(const GrayImage& img, double threshold) {
  BinaryMask out(img.width, img.height);
  const auto px = [&](int x, int y) {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return static_cast<double>(img.at(x, y));
  };
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      out.set(x, y, std::hypot(gx, gy) > threshold);
    }
  return out;
}

/// 4-connected flood fill over unset pixels from (x0, y0).
inline BinaryMask flood4(const BinaryMask& walls, int x0, int y0) {
  BinaryMask seen(walls.width, walls.height);
  std::deque<std::pair<int, int>> q{{x0, y0}};
  seen.set(x0, y0);
  while (!q.empty()) {
    auto [x, y] = q.front();
    q.pop_front();
    const int d[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (auto& s : d) {
      const int nx = x + s[0], ny = y + s[1];
      if (!walls.in_bounds(nx, ny) || walls.test(nx, ny) || seen.test(nx, ny)) continue;
      seen.set(nx, ny);
      q.emplace_back(nx, ny);
    }
  }
  return seen;
}

/// 8-connected BFS over free cells of a grid.
inline bool grid_reachable8(const hydrosim::world::OccupancyGrid& g, int si, int sj, int gi, int gj) {
  std::vector<char> seen(g.size(), 0);
  std::deque<std::pair<int, int>> q{{si, sj}};
  seen[g.index(si, sj)] = 1;
  while (!q.empty()) {
    auto [i, j] = q.front();
    q.pop_front();
    if (i == gi && j == gj) return true;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int ni = i + di, nj = j + dj;
        if (g.blocked(ni, nj) || seen[g.index(ni, nj)]) continue;
        seen[g.index(ni, nj)] = 1;
        q.emplace_back(ni, nj);
      }
  }
  return false;
}

/// Bitwise CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
inline std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte) << 8;
    for (int b = 0; b < 8; ++b) crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021) : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

}  // namespace oracle
