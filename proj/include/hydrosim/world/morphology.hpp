#pragma once

#include <algorithm>

#include "hydrosim/world/image.hpp"

namespace hydrosim::world {

/// Binary erosion with a (2r+1)x(2r+1) square element. Pixels outside the
/// raster count as unset, so erosion also trims set regions at the border.
inline BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int w = mask.width;
  const int h = mask.height;

  // separable: horizontal pass, then vertical pass
  BinaryMask rows(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dx = -radius; dx <= radius && all; ++dx) {
        const int nx = x + dx;
        all = nx >= 0 && nx < w && mask.test(nx, y);
      }
      rows.set(x, y, all);
    }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dy = -radius; dy <= radius && all; ++dy) {
        const int ny = y + dy;
        all = ny >= 0 && ny < h && rows.test(x, ny);
      }
      out.set(x, y, all);
    }
  return out;
}

}  // namespace hydrosim::world
