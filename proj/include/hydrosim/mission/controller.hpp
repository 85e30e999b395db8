#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"
#include "hydrosim/planner/types.hpp"
#include "hydrosim/vehicle/thrust.hpp"

namespace hydrosim::mission {

struct ControllerParams {
  double lookahead = 1.0;         ///< m
  double k_heading = 1.5;         ///< 1/s
  double v_cruise = 0.6;          ///< m/s
  double arrival_radius = 0.05;   ///< m
  double wp_hit_threshold = 0.10;  ///< m
  double slow_radius = 1.5;       ///< speed ramps down inside this distance to the goal, m
  double v_min = 0.03;            ///< floor of the ramp so arrival takes finite time, m/s
  double hold_rearm = 0.08;       ///< station keeping re-engages beyond this, m

  void validate() const {
    if (!(lookahead > 0)) throw Error(Errc::ConfigInvalid, "controller: lookahead must be > 0");
    if (!(arrival_radius > 0)) throw Error(Errc::ConfigInvalid, "controller: arrival_radius must be > 0");
    if (!(k_heading >= 0) || !(v_cruise > 0) || !(slow_radius > 0) || !(v_min >= 0))
      throw Error(Errc::ConfigInvalid, "controller: gains and speeds");
    if (!(wp_hit_threshold > 0)) throw Error(Errc::ConfigInvalid, "controller: wp_hit_threshold must be > 0");
    if (!(hold_rearm >= arrival_radius)) throw Error(Errc::ConfigInvalid, "controller: hold_rearm < arrival_radius");
  }
};

struct FollowResult {
  vehicle::VelocityCommand cmd;
  bool arrived = false;
  double distance_to_goal = 0.0;
};

namespace detail {

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Arc length of the polyline point closest to p.
inline double project_arc(const std::vector<Pose2>& poses, Vec2 p) {
  double best = std::numeric_limits<double>::infinity(), best_arc = 0.0, arc = 0.0;
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    const Vec2 a = poses[i].position(), b = poses[i + 1].position();
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double s = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const double d = distance(a + s * ab, p);
    const double len = std::sqrt(len2);
    if (d < best) {
      best = d;
      best_arc = arc + s * len;
    }
    arc += len;
  }
  return best_arc;
}

inline Vec2 point_at_arc(const std::vector<Pose2>& poses, double target) {
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    const Vec2 a = poses[i].position(), b = poses[i + 1].position();
    const double len = distance(a, b);
    if (arc + len >= target && len > 0) return a + ((target - arc) / len) * (b - a);
    arc += len;
  }
  return poses.back().position();
}

}  // namespace detail

/// Pure pursuit toward the path point one lookahead past the closest point.
/// Speed ramps down near the goal and with heading error; inside
/// arrival_radius of the final pose the command is zero and `arrived` set.
inline FollowResult follow_controller(const Pose2& est, const planner::Trajectory& traj, const ControllerParams& p) {
  if (traj.poses.empty()) throw Error(Errc::InvalidPlan, "follow_controller: empty trajectory");
  FollowResult r;
  const Vec2 pos = est.position();
  const Vec2 goal = traj.poses.back().position();
  r.distance_to_goal = distance(pos, goal);
  if (r.distance_to_goal <= p.arrival_radius) {
    r.arrived = true;
    return r;
  }
  const Vec2 target = traj.poses.size() < 2
                          ? goal
                          : detail::point_at_arc(traj.poses, detail::project_arc(traj.poses, pos) + p.lookahead);
  const Vec2 to = target - pos;
  const double err = heading_difference(std::atan2(to.y, to.x), est.theta);
  const double ramp = std::clamp(r.distance_to_goal / p.slow_radius, 0.0, 1.0);
  const double v = std::max(p.v_min, p.v_cruise * ramp);
  r.cmd = {v * std::max(0.0, std::cos(err)), p.k_heading * err};
  return r;
}

enum class Mode { Auto, Manual, EStopped };

constexpr const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Auto: return "Auto";
    case Mode::Manual: return "Manual";
    case Mode::EStopped: return "EStopped";
  }
  return "?";
}

inline vehicle::VelocityCommand arbitrate(Mode mode, const vehicle::VelocityCommand& auto_cmd,
                                          const vehicle::VelocityCommand& manual_cmd, bool estop,
                                          const vehicle::VehicleParams& limits) {
  if (estop || mode == Mode::EStopped) return {0.0, 0.0};
  return vehicle::clamp_command(mode == Mode::Manual ? manual_cmd : auto_cmd, limits);
}

struct WaypointMetrics {
  double precision_pct = 0.0;
  double mean_err_m = 0.0;
  double max_err_m = 0.0;
  double threshold_m = 0.0;
  std::size_t attempted = 0;
};

inline WaypointMetrics waypoint_metrics(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) throw Error(Errc::EmptyLog, "no waypoint errors recorded");
  WaypointMetrics m;
  m.threshold_m = threshold;
  m.attempted = errors.size();
  std::size_t hits = 0;
  double sum = 0.0;
  for (double e : errors) {
    if (e <= threshold) ++hits;
    sum += e;
    m.max_err_m = std::max(m.max_err_m, e);
  }
  m.precision_pct = 100.0 * static_cast<double>(hits) / static_cast<double>(errors.size());
  m.mean_err_m = sum / static_cast<double>(errors.size());
  return m;
}

inline nlohmann::json waypoint_metrics_to_json(const WaypointMetrics& m) {
  return {{"precision_pct", m.precision_pct},
          {"mean_err_m", m.mean_err_m},
          {"max_err_m", m.max_err_m},
          {"threshold_m", m.threshold_m},
          {"attempted", m.attempted}};
}

inline nlohmann::json controller_params_to_json(const ControllerParams& p) {
  return {{"lookahead", p.lookahead},       {"k_heading", p.k_heading},
          {"v_cruise", p.v_cruise},         {"arrival_radius", p.arrival_radius},
          {"wp_hit_threshold", p.wp_hit_threshold}, {"slow_radius", p.slow_radius},
          {"v_min", p.v_min},               {"hold_rearm", p.hold_rearm}};
}

inline ControllerParams controller_params_from_json(const nlohmann::json& j, ControllerParams p = {}) {
  try {
    p.lookahead = j.value("lookahead", p.lookahead);
    p.k_heading = j.value("k_heading", p.k_heading);
    p.v_cruise = j.value("v_cruise", p.v_cruise);
    p.arrival_radius = j.value("arrival_radius", p.arrival_radius);
    p.wp_hit_threshold = j.value("wp_hit_threshold", p.wp_hit_threshold);
    p.slow_radius = j.value("slow_radius", p.slow_radius);
    p.v_min = j.value("v_min", p.v_min);
    p.hold_rearm = j.value("hold_rearm", p.hold_rearm);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("controller: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace hydrosim::mission
