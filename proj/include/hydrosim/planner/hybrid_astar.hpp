#pragma once

#include <cmath>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

#include "hydrosim/core/geometry.hpp"
#include "hydrosim/planner/collision.hpp"
#include "hydrosim/planner/distance_field.hpp"
#include "hydrosim/planner/types.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace hydrosim::planner {

struct Successor {
  Pose2 pose;
  double curvature = 0.0;
  double dtheta = 0.0;
  double steer = 0.0;
};

/// One primitive of the kinematic model: heading advances by
/// (v / L) tan(steer) dt, position moves along the heading at the start.
inline Successor integrate_primitive(const Pose2& pose, double steer, const PlannerParams& params) {
  const double dt = params.primitive_dt();
  const double dtheta = params.speed / params.thruster_separation * std::tan(steer) * dt;
  Successor s;
  s.pose.x = pose.x + params.speed * std::cos(pose.theta) * dt;
  s.pose.y = pose.y + params.speed * std::sin(pose.theta) * dt;
  s.pose.theta = normalize_heading(pose.theta + dtheta);
  s.curvature = std::tan(steer) / params.thruster_separation;
  s.dtheta = dtheta;
  s.steer = steer;
  return s;
}

inline std::vector<Successor> successors(const Pose2& pose, const PlannerParams& params) {
  std::vector<Successor> out;
  out.reserve(params.steer_set.size());
  for (double steer : params.steer_set) out.push_back(integrate_primitive(pose, steer, params));
  return out;
}

/// Composite per-step cost: obstacle distance, squared curvature and
/// squared heading change.
inline double step_cost(double d, double curvature, double dtheta, const PlannerParams& params) {
  const double clearance = params.clearance_mode == ClearanceMode::AsWritten
                               ? d
                               : std::max(0.0, params.d_safe - d);
  return params.w_d * clearance + params.w_kappa * curvature * curvature + params.w_s * dtheta * dtheta;
}

/// Cost the search actually charges for one primitive.
inline double transition_cost(double d, const Successor& s, const PlannerParams& params) {
  return step_cost(d, s.curvature, s.dtheta, params) + params.w_len * params.step_length;
}

inline double distance_at(const DistanceField& field, const world::OccupancyGrid& grid, Vec2 p) {
  const auto c = grid.cell_of(p);
  return field.at(c.i, c.j);
}

enum class PlanStatus { Found, NoPath, StartOccupied, GoalOccupied, ExpansionLimit };

constexpr const char* plan_status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::Found: return "Found";
    case PlanStatus::NoPath: return "NoPath";
    case PlanStatus::StartOccupied: return "StartOccupied";
    case PlanStatus::GoalOccupied: return "GoalOccupied";
    case PlanStatus::ExpansionLimit: return "ExpansionLimit";
  }
  return "?";
}

struct PlanResult {
  PlanStatus status = PlanStatus::NoPath;
  Trajectory trajectory;
  std::size_t expansions = 0;

  bool ok() const { return status == PlanStatus::Found; }
};

struct PathNode {
  Pose2 pose;
  double g = 0.0;
  double f = 0.0;
  double h = 0.0;
  std::int64_t parent = -1;
  double steer = 0.0;
  int substeps = 0;  ///< primitive repetitions from the parent
};

namespace detail {

inline int heading_bin(double theta, int bins) {
  const double width = 2.0 * std::numbers::pi / bins;
  long b = std::lround(normalize_heading(theta) / width);
  b %= bins;
  if (b < 0) b += bins;
  return static_cast<int>(b);
}

struct OpenEntry {
  double f;
  double h;
  std::uint64_t order;
  std::int64_t node;
};

struct OpenCompare {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.order > b.order;
  }
};

}  // namespace detail

/// Hybrid-A* over (x, y, theta). Nodes are deduplicated per
/// (cell, heading bin); the goal test runs when a node is popped. A
/// primitive that does not leave its parent's (cell, bin) is repeated
/// until it does, so step lengths shorter than a cell still make progress.
inline PlanResult hybrid_astar(const world::OccupancyGrid& grid, const DistanceField& field, const Pose2& start,
                               const Pose2& goal, const PlannerParams& params) {
  params.validate();
  PlanResult result;
  const CollisionChecker checker(grid, field, params.footprint_radius);
  if (!checker.pose_free(start.position())) {
    result.status = PlanStatus::StartOccupied;
    return result;
  }
  if (!checker.pose_free(goal.position())) {
    result.status = PlanStatus::GoalOccupied;
    return result;
  }

  const auto within_goal = [&](const Pose2& p) {
    return distance(p.position(), goal.position()) <= params.goal_xy_tol &&
           std::abs(heading_difference(p.theta, goal.theta)) <= params.goal_theta_tol;
  };
  const auto heuristic = [&](const Pose2& p) {
    return params.w_len * std::max(0.0, distance(p.position(), goal.position()) - params.goal_xy_tol);
  };
  const auto key_of = [&](const Pose2& p) -> std::int64_t {
    const auto c = grid.cell_of(p.position());
    return (static_cast<std::int64_t>(grid.index(c.i, c.j))) * params.heading_bins +
           detail::heading_bin(p.theta, params.heading_bins);
  };

  if (within_goal(start)) {
    result.status = PlanStatus::Found;
    result.trajectory.poses = {start};
    result.trajectory.total_cost = 0.0;
    return result;
  }

  struct KeyState {
    double g;
    bool closed;
  };
  std::vector<PathNode> nodes;
  std::unordered_map<std::int64_t, KeyState> seen;
  std::priority_queue<detail::OpenEntry, std::vector<detail::OpenEntry>, detail::OpenCompare> open;
  std::uint64_t order = 0;

  const double h0 = heuristic(start);
  nodes.push_back({start, 0.0, h0, h0, -1, 0.0, 0});
  seen[key_of(start)] = {0.0, false};
  open.push({h0, h0, order++, 0});

  // a primitive chain never needs more repetitions than this to leave a cell
  const int max_chain = 2 + static_cast<int>(std::ceil(2.0 * grid.resolution() / params.step_length));

  std::int64_t goal_node = -1;
  while (!open.empty()) {
    const auto top = open.top();
    open.pop();
    const PathNode current = nodes[static_cast<std::size_t>(top.node)];
    const std::int64_t key = key_of(current.pose);
    auto& state = seen[key];
    if (state.closed || current.g > state.g) continue;
    state.closed = true;

    if (within_goal(current.pose)) {
      goal_node = top.node;
      break;
    }
    if (++result.expansions > params.max_expansions) {
      result.status = PlanStatus::ExpansionLimit;
      return result;
    }

    for (double steer : params.steer_set) {
      Pose2 pose = current.pose;
      double g = current.g;
      int steps = 0;
      bool free = true;
      do {
        const Successor s = integrate_primitive(pose, steer, params);
        if (!checker.segment_free(pose.position(), s.pose.position())) {
          free = false;
          break;
        }
        g += transition_cost(distance_at(field, grid, s.pose.position()), s, params);
        pose = s.pose;
        ++steps;
      } while (key_of(pose) == key && steps < max_chain);
      if (!free || key_of(pose) == key) continue;

      const std::int64_t child_key = key_of(pose);
      auto it = seen.find(child_key);
      if (it != seen.end() && (it->second.closed || it->second.g <= g)) continue;
      seen[child_key] = {g, false};
      const double h = heuristic(pose);
      nodes.push_back({pose, g, g + h, h, top.node, steer, steps});
      open.push({g + h, h, order++, static_cast<std::int64_t>(nodes.size() - 1)});
    }
  }

  if (goal_node < 0) {
    result.status = PlanStatus::NoPath;
    return result;
  }

  std::vector<std::int64_t> chain;
  for (std::int64_t n = goal_node; n >= 0; n = nodes[static_cast<std::size_t>(n)].parent) chain.push_back(n);
  std::reverse(chain.begin(), chain.end());

  Trajectory& traj = result.trajectory;
  traj.poses.push_back(nodes[static_cast<std::size_t>(chain.front())].pose);
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const PathNode& node = nodes[static_cast<std::size_t>(chain[k])];
    Pose2 pose = traj.poses.back();
    for (int s = 0; s < node.substeps; ++s) {
      const Successor succ = integrate_primitive(pose, node.steer, params);
      traj.poses.push_back(succ.pose);
      traj.curvatures.push_back(succ.curvature);
      pose = succ.pose;
    }
  }
  traj.total_cost = nodes[static_cast<std::size_t>(goal_node)].g;
  result.status = PlanStatus::Found;
  return result;
}

inline PlanResult hybrid_astar(const world::OccupancyGrid& grid, const Pose2& start, const Pose2& goal,
                               const PlannerParams& params) {
  const DistanceField field = distance_field(grid);
  return hybrid_astar(grid, field, start, goal, params);
}

}  // namespace hydrosim::planner
