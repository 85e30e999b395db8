#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <vector>

#include "hydrosim/world/image.hpp"

namespace hydrosim::world {

struct CannyParams {
  double low = 20.0;   ///< hysteresis low threshold, normalized gradient units
  double high = 50.0;  ///< hysteresis high threshold
  double sigma = 1.4;  ///< Gaussian blur sigma, 5x5 kernel
};

namespace detail {

struct FloatRaster {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  FloatRaster(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, 0.0) {}

  double clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width ? width - 1 : x);
    y = y < 0 ? 0 : (y >= height ? height - 1 : y);
    return v[static_cast<std::size_t>(y) * width + x];
  }
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

inline FloatRaster gaussian_blur5(const GrayImage& img, double sigma) {
  std::array<double, 5> k{};
  double sum = 0.0;
  for (int i = -2; i <= 2; ++i) {
    k[i + 2] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + 2];
  }
  for (auto& w : k) w /= sum;

  FloatRaster src(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) src.v[i] = img.pixels[i];

  FloatRaster tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * src.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  FloatRaster out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Canny edge detector: 5x5 Gaussian blur, Sobel gradients, non-maximum
/// suppression and hysteresis with 8-connectivity. Gradient magnitudes are
/// divided by 4 so that a clean intensity step of height h reads as h.
inline BinaryMask extract_edges(const GrayImage& img, const CannyParams& params = {}) {
  using detail::FloatRaster;
  const int w = img.width;
  const int h = img.height;
  const FloatRaster blurred = detail::gaussian_blur5(img, params.sigma);

  FloatRaster mag(w, h);
  std::vector<std::uint8_t> dir(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto p = [&](int dx, int dy) { return blurred.clamped(x + dx, y + dy); };
      const double gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
      const double m = std::hypot(gx, gy) / 4.0;
      mag.at(x, y) = m < 1e-9 ? 0.0 : m;
      // quantize gradient direction to 0, 45, 90, 135 degrees
      double angle = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
      if (angle < 0) angle += 180.0;
      std::uint8_t d = 0;
      if (angle >= 22.5 && angle < 67.5) d = 1;
      else if (angle >= 67.5 && angle < 112.5) d = 2;
      else if (angle >= 112.5 && angle < 157.5) d = 3;
      dir[static_cast<std::size_t>(y) * w + x] = d;
    }
  }

  // Ties along the gradient keep the pixel on the positive side so a
  // symmetric step produces a one-pixel-wide edge.
  static constexpr std::array<std::array<int, 2>, 4> kStep{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}}};
  FloatRaster thin(w, h);
  const auto mag_or_zero = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag.at(x, y);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = mag.at(x, y);
      if (m <= 0.0) continue;
      const auto [sx, sy] = kStep[dir[static_cast<std::size_t>(y) * w + x]];
      const double behind = mag_or_zero(x - sx, y - sy);
      const double ahead = mag_or_zero(x + sx, y + sy);
      const bool ge_behind = m > behind || detail::nearly_equal(m, behind);
      const bool gt_ahead = m > ahead && !detail::nearly_equal(m, ahead);
      if (ge_behind && gt_ahead) thin.at(x, y) = m;
    }
  }

  BinaryMask edges(w, h);
  std::deque<std::pair<int, int>> frontier;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (thin.at(x, y) >= params.high && thin.at(x, y) > 0.0) {
        edges.set(x, y);
        frontier.emplace_back(x, y);
      }
  while (!frontier.empty()) {
    const auto [x, y] = frontier.front();
    frontier.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (!edges.in_bounds(nx, ny) || edges.test(nx, ny)) continue;
        const double m = thin.at(nx, ny);
        if (m > 0.0 && m >= params.low) {
          edges.set(nx, ny);
          frontier.emplace_back(nx, ny);
        }
      }
  }
  return edges;
}

inline BinaryMask extract_edges(const GrayImage& img, double low, double high) {
  return extract_edges(img, CannyParams{low, high, 1.4});
}

}  // namespace hydrosim::world
