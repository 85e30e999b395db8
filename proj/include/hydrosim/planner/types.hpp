#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"

namespace hydrosim::planner {

/// How the obstacle-distance term of the step cost is applied.
enum class ClearanceMode {
  AsWritten,         ///< w_d * d, the literal composite cost
  ClearancePenalty,  ///< w_d * max(0, d_safe - d)
};

struct PlannerParams {
  double w_d = 1.0;
  double w_kappa = 10.0;
  double w_s = 1.0;
  /// Travel-distance weight added per step on top of the composite cost.
  /// Makes the Euclidean heuristic admissible; 0 yields uniform-cost search.
  double w_len = 1.0;
  std::vector<double> steer_set{0.0, 0.15, -0.15, 0.3, -0.3};
  double step_length = 0.5;          ///< m per primitive
  double speed = 1.0;                ///< nominal primitive speed, m/s
  double thruster_separation = 0.8;  ///< L in the kinematic model, m
  int heading_bins = 72;
  double goal_xy_tol = 0.25;
  double goal_theta_tol = std::numbers::pi;
  ClearanceMode clearance_mode = ClearanceMode::ClearancePenalty;
  double d_safe = 2.0;
  double footprint_radius = 0.8;
  std::size_t max_expansions = 400'000;

  double primitive_dt() const { return step_length / speed; }

  double max_steer() const {
    double m = 0.0;
    for (double d : steer_set) m = std::max(m, std::abs(d));
    return m;
  }

  double max_curvature() const { return std::tan(max_steer()) / thruster_separation; }

  void validate() const {
    const auto fail = [](const std::string& m) { throw Error(Errc::ConfigInvalid, "planner: " + m); };
    if (w_d < 0 || w_kappa < 0 || w_s < 0 || w_len < 0) fail("weights must be >= 0");
    if (!(step_length > 0)) fail("step_length must be > 0");
    if (!(speed > 0)) fail("speed must be > 0");
    if (!(thruster_separation > 0)) fail("thruster_separation must be > 0");
    if (heading_bins < 8) fail("heading_bins must be >= 8");
    if (steer_set.empty()) fail("steer_set is empty");
    for (double d : steer_set)
      if (!(std::abs(d) < std::numbers::pi / 2)) fail("|steer| must be < pi/2");
    if (!(goal_xy_tol >= 0) || !(goal_theta_tol >= 0)) fail("tolerances must be >= 0");
    if (!(footprint_radius >= 0)) fail("footprint_radius must be >= 0");
  }
};

/// Ordered poses; curvatures[i] belongs to the segment poses[i] -> poses[i+1].
struct Trajectory {
  std::vector<Pose2> poses;
  std::vector<double> curvatures;
  double total_cost = 0.0;

  bool empty() const { return poses.empty(); }

  double length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < poses.size(); ++i) len += distance(poses[i - 1].position(), poses[i].position());
    return len;
  }
};

/// Sum of absolute heading changes between consecutive segments.
inline double total_turning(const std::vector<Pose2>& poses) {
  double sum = 0.0;
  for (std::size_t i = 2; i < poses.size(); ++i) {
    const Vec2 a = poses[i - 1].position() - poses[i - 2].position();
    const Vec2 b = poses[i].position() - poses[i - 1].position();
    if (a.norm() == 0.0 || b.norm() == 0.0) continue;
    sum += std::abs(heading_difference(std::atan2(b.y, b.x), std::atan2(a.y, a.x)));
  }
  return sum;
}

inline nlohmann::json params_to_json(const PlannerParams& p) {
  return {{"w_d", p.w_d},
          {"w_kappa", p.w_kappa},
          {"w_s", p.w_s},
          {"w_len", p.w_len},
          {"steer_set", p.steer_set},
          {"step_length", p.step_length},
          {"speed", p.speed},
          {"thruster_separation", p.thruster_separation},
          {"heading_bins", p.heading_bins},
          {"goal_xy_tol", p.goal_xy_tol},
          {"goal_theta_tol", p.goal_theta_tol},
          {"clearance_mode", p.clearance_mode == ClearanceMode::AsWritten ? "as_written" : "clearance_penalty"},
          {"d_safe", p.d_safe},
          {"footprint_radius", p.footprint_radius},
          {"max_expansions", p.max_expansions}};
}

/// Missing keys keep their defaults.
inline PlannerParams params_from_json(const nlohmann::json& j, PlannerParams p = {}) {
  try {
    p.w_d = j.value("w_d", p.w_d);
    p.w_kappa = j.value("w_kappa", p.w_kappa);
    p.w_s = j.value("w_s", p.w_s);
    p.w_len = j.value("w_len", p.w_len);
    p.steer_set = j.value("steer_set", p.steer_set);
    p.step_length = j.value("step_length", p.step_length);
    p.speed = j.value("speed", p.speed);
    p.thruster_separation = j.value("thruster_separation", p.thruster_separation);
    p.heading_bins = j.value("heading_bins", p.heading_bins);
    p.goal_xy_tol = j.value("goal_xy_tol", p.goal_xy_tol);
    p.goal_theta_tol = j.value("goal_theta_tol", p.goal_theta_tol);
    if (j.contains("clearance_mode")) {
      const auto mode = j.at("clearance_mode").get<std::string>();
      if (mode == "as_written") p.clearance_mode = ClearanceMode::AsWritten;
      else if (mode == "clearance_penalty") p.clearance_mode = ClearanceMode::ClearancePenalty;
      else throw Error(Errc::ConfigInvalid, "unknown clearance_mode " + mode);
    }
    p.d_safe = j.value("d_safe", p.d_safe);
    p.footprint_radius = j.value("footprint_radius", p.footprint_radius);
    p.max_expansions = j.value("max_expansions", p.max_expansions);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  p.validate();
  return p;
}

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : t.poses) poses.push_back({p.x, p.y, p.theta});
  return {{"poses", poses}, {"curvatures", t.curvatures}, {"total_cost", t.total_cost}, {"length", t.length()}};
}

}  // namespace hydrosim::planner
