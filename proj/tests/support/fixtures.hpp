#pragma once

#include <algorithm>
#include <cstdlib>
#include <random>

#include "hydrosim/world/image.hpp"

namespace fixtures {

/// 32x32 black image with a white 16x16 square spanning [8, 24).
inline hydrosim::world::GrayImage square_image() {
  hydrosim::world::GrayImage img(32, 32, 0);
  for (int y = 8; y < 24; ++y)
    for (int x = 8; x < 24; ++x) img.at(x, y) = 255;
  return img;
}

/// Chebyshev-style pixel distance from (x, y) to the square's boundary
/// pixels (the outermost rows/columns of the square, 8 and 23).
inline int square_boundary_distance(int x, int y) {
  int best = 1 << 20;
  for (int by = 8; by < 24; ++by)
    for (int bx = 8; bx < 24; ++bx) {
      if (bx != 8 && bx != 23 && by != 8 && by != 23) continue;
      best = std::min(best, std::max(std::abs(bx - x), std::abs(by - y)));
    }
  return best;
}

inline hydrosim::world::BinaryMask random_mask(std::mt19937& rng, int w, int h, double p_set) {
  hydrosim::world::BinaryMask m(w, h);
  std::bernoulli_distribution set(p_set);
  for (auto& b : m.bits) b = set(rng) ? 1 : 0;
  return m;
}

}  // namespace fixtures
