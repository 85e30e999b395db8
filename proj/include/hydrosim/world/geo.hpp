#pragma once

#include <cmath>
#include <numbers>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"

namespace hydrosim::world {

inline constexpr double kEarthRadius = 6'371'000.0;

struct GeoPoint {
  double lat = 0.0;  ///< degrees
  double lon = 0.0;  ///< degrees
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Equirectangular tangent frame: x east, y north, metres.
struct LocalFrame {
  GeoPoint origin;
  double meters_per_deg_lat = 0.0;
  double meters_per_deg_lon = 0.0;
};

inline LocalFrame make_local_frame(GeoPoint origin) {
  if (!(std::abs(origin.lat) <= 90.0) || !(std::abs(origin.lon) <= 180.0))
    throw Error(Errc::ConfigInvalid, "geo origin out of range");
  const double m_per_deg = kEarthRadius * std::numbers::pi / 180.0;
  const double lon_scale = m_per_deg * std::cos(origin.lat * std::numbers::pi / 180.0);
  if (!(lon_scale > 0.0)) throw Error(Errc::ConfigInvalid, "frame origin at a pole");
  return {origin, m_per_deg, lon_scale};
}

inline Vec2 geo_to_local(const LocalFrame& f, GeoPoint p) {
  return {(p.lon - f.origin.lon) * f.meters_per_deg_lon, (p.lat - f.origin.lat) * f.meters_per_deg_lat};
}

inline GeoPoint local_to_geo(const LocalFrame& f, Vec2 p) {
  return {f.origin.lat + p.y / f.meters_per_deg_lat, f.origin.lon + p.x / f.meters_per_deg_lon};
}

}  // namespace hydrosim::world
