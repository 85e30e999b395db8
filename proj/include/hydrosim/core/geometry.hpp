#pragma once

#include <cmath>
#include <numbers>

namespace hydrosim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Planar pose in the local frame; theta is counter-clockwise from +x.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// Wraps an angle to (-pi, pi].
inline double normalize_heading(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::remainder(theta, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

/// Signed smallest rotation taking `from` onto `to`.
inline double heading_difference(double to, double from) { return normalize_heading(to - from); }

}  // namespace hydrosim
