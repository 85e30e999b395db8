#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/sampler/sampler.hpp"
#include "hydrosim/world/geo.hpp"

namespace hydrosim::mission {

struct SamplingAssignment {
  int module = 0;  ///< zero based
  int motor = 0;   ///< zero based

  friend bool operator==(const SamplingAssignment&, const SamplingAssignment&) = default;
};

struct Waypoint {
  world::GeoPoint geo;
  std::optional<SamplingAssignment> sampling;
  double hold_s = 0.0;
};

struct MissionPlan {
  std::vector<Waypoint> waypoints;
};

/// Throws DuplicateMotorAssignment if a motor is used twice and
/// InvalidPlan for anything else out of range.
inline void validate_plan(const MissionPlan& plan, const sampler::SamplerParams& sp = {}) {
  std::set<std::pair<int, int>> used;
  for (const auto& w : plan.waypoints) {
    if (!(std::abs(w.geo.lat) <= 90.0) || !(std::abs(w.geo.lon) <= 180.0))
      throw Error(Errc::InvalidPlan, "waypoint coordinates out of range");
    if (!(w.hold_s >= 0.0)) throw Error(Errc::InvalidPlan, "hold_s must be >= 0");
    if (!w.sampling) continue;
    const auto [m, k] = *w.sampling;
    if (m < 0 || m >= sp.n_modules || k < 0 || k >= sp.motors_per_module)
      throw Error(Errc::InvalidPlan, "sampling motor out of range");
    if (!used.insert({m, k}).second)
      throw Error(Errc::DuplicateMotorAssignment, "motor " + sampler::motor_label(m, k) + " assigned twice");
  }
  if (static_cast<int>(used.size()) > sp.n_motors()) throw Error(Errc::InvalidPlan, "more assignments than motors");
}

/// Waypoint JSON: {lat, lon, hold_s?, module?, motor?} with zero-based
/// module and motor, or {..., sampler: "B2"} using the group label.
inline MissionPlan plan_from_json(const nlohmann::json& j, const sampler::SamplerParams& sp = {}) {
  MissionPlan plan;
  try {
    for (const auto& w : j.at("waypoints")) {
      Waypoint wp;
      wp.geo = {w.at("lat").get<double>(), w.at("lon").get<double>()};
      wp.hold_s = w.value("hold_s", 0.0);
      if (w.contains("sampler")) {
        try {
          const auto [m, k] = sampler::parse_motor_label(w.at("sampler").get<std::string>(), sp);
          wp.sampling = SamplingAssignment{m, k};
        } catch (const Error& e) {
          throw Error(Errc::InvalidPlan, e.what());
        }
      } else if (w.contains("module") || w.contains("motor")) {
        wp.sampling = SamplingAssignment{w.at("module").get<int>(), w.at("motor").get<int>()};
      }
      plan.waypoints.push_back(wp);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidPlan, std::string("mission plan: ") + e.what());
  }
  validate_plan(plan, sp);
  return plan;
}

inline nlohmann::json plan_to_json(const MissionPlan& plan) {
  nlohmann::json wps = nlohmann::json::array();
  for (const auto& w : plan.waypoints) {
    nlohmann::json o{{"lat", w.geo.lat}, {"lon", w.geo.lon}, {"hold_s", w.hold_s}};
    if (w.sampling) {
      o["module"] = w.sampling->module;
      o["motor"] = w.sampling->motor;
    }
    wps.push_back(o);
  }
  return {{"waypoints", wps}};
}

}  // namespace hydrosim::mission
