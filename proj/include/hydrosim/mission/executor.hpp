#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"
#include "hydrosim/mission/bt.hpp"
#include "hydrosim/mission/controller.hpp"
#include "hydrosim/mission/plan.hpp"
#include "hydrosim/planner/collision.hpp"
#include "hydrosim/planner/distance_field.hpp"
#include "hydrosim/planner/hybrid_astar.hpp"
#include "hydrosim/planner/smoother.hpp"
#include "hydrosim/sampler/sampler.hpp"
#include "hydrosim/vehicle/sensors.hpp"
#include "hydrosim/vehicle/thrust.hpp"
#include "hydrosim/world/geo.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace hydrosim::mission {

enum LeafAction : int { kPlanPath = 0, kFollowPath, kReplan, kCollectSample, kReportStatus };

/// Root Sequence over waypoints; each waypoint runs
/// Sequence[PlanPath, Fallback[FollowPath, Sequence[Replan, FollowPath]],
/// CollectSample (if assigned), ReportStatus].
inline Node build_mission_tree(const MissionPlan& plan, const sampler::SamplerParams& sp = {}) {
  validate_plan(plan, sp);
  std::vector<Node> subtrees;
  for (std::size_t k = 0; k < plan.waypoints.size(); ++k) {
    const int i = static_cast<int>(k);
    const auto& w = plan.waypoints[k];
    std::vector<Node> steps;
    steps.push_back(action("PlanPath", kPlanPath, i));
    steps.push_back(fallback("Navigate", {action("FollowPath", kFollowPath, i),
                                          sequence("Recover", {action("Replan", kReplan, i),
                                                               action("FollowPath", kFollowPath, i)})}));
    if (w.sampling)
      steps.push_back(
          action("CollectSample " + sampler::motor_label(w.sampling->module, w.sampling->motor), kCollectSample, i));
    steps.push_back(action("ReportStatus", kReportStatus, i));
    Node sub = sequence("Waypoint " + std::to_string(i + 1), std::move(steps));
    sub.waypoint = i;
    subtrees.push_back(std::move(sub));
  }
  return sequence("Mission", std::move(subtrees));
}

/// Planner settings for missions: the hull can pivot, so primitives turn
/// tighter than the planner defaults (radius about 1.2 m at 0.6 rad).
inline planner::PlannerParams mission_planner_defaults() {
  planner::PlannerParams p;
  p.steer_set = {0.0, 0.3, -0.3, 0.6, -0.6};
  return p;
}

struct MissionConfig {
  ControllerParams controller;
  planner::PlannerParams planner = mission_planner_defaults();
  vehicle::VehicleParams vehicle;
  bool replanning = true;
  int smooth_iterations = 30;
  double smooth_alpha = 0.2;
  double lidar_max_range = 12.0;  ///< returns at or beyond this are misses
};

/// Per-tick view of the world the executor may read.
struct Blackboard {
  double t = 0.0;
  Pose2 est;                        ///< EKF pose, drives every decision
  Pose2 truth;                      ///< scoring only
  vehicle::RoiResult roi;           ///< forward corridor check
  const std::vector<double>* scan = nullptr;  ///< fresh LiDAR ranges, beams from the heading
  sampler::SamplerState* sampler = nullptr;
};

struct MissionEvent {
  double t = 0.0;
  std::string kind;
  nlohmann::json data;
};

struct WaypointRecord {
  int index = 0;
  double error_m = 0.0;      ///< true pose to waypoint when reported
  double est_error_m = 0.0;  ///< estimated pose to waypoint
  double t_arrived = 0.0;
  double t_reported = 0.0;
};

/// Operator-facing drive mode; e-stop is tracked separately and wins.
enum class DriveRequest { Auto, Manual };

class MissionExecutor {
 public:
  struct Output {
    vehicle::VelocityCommand cmd;
    Status status = Status::Running;
    std::vector<MissionEvent> events;
  };

  MissionExecutor(MissionPlan plan, world::OccupancyGrid known, world::LocalFrame frame, MissionConfig cfg = {},
                  const sampler::SamplerParams& sp = {})
      : plan_(std::move(plan)), frame_(frame), cfg_(std::move(cfg)), map_(std::move(known)), static_map_(map_) {
    cfg_.controller.validate();
    cfg_.planner.validate();
    cfg_.vehicle.validate();
    tree_ = build_mission_tree(plan_, sp);
    for (const auto& w : plan_.waypoints) goals_.push_back(world::geo_to_local(frame_, w.geo));
    wp_.assign(plan_.waypoints.size(), {});
    field_ = planner::distance_field(map_);
  }

  // Operator inputs take effect at the next tick.
  void request_mode(DriveRequest m) { pending_mode_ = m; }
  void set_manual_command(const vehicle::VelocityCommand& c) { manual_ = c; }
  void request_estop(bool engage) { pending_estop_ = engage; }

  Output tick(const Blackboard& bb) {
    Output out;
    bb_ = &bb;
    events_ = &out.events;
    apply_operator_inputs();
    if (bb.scan) integrate_scan(*bb.scan);

    if (status_ != Status::Running || estop_ || request_ == DriveRequest::Manual) {
      out.cmd = arbitrate(mode(), {}, manual_, estop_, cfg_.vehicle);
      out.status = status_;
      return out;
    }

    auto_cmd_ = {};
    const auto on_transition = [&](const Node& n, Status s) {
      emit("bt", {{"node", n.name}, {"waypoint", n.waypoint}, {"status", status_name(s)}});
    };
    status_ = mission::tick(tree_, [&](const Node& n) { return run_leaf(n); }, on_transition);
    if (status_ != Status::Running) {
      auto_cmd_ = {};
      emit("mission", {{"status", status_name(status_)}});
    }
    out.cmd = arbitrate(Mode::Auto, auto_cmd_, manual_, false, cfg_.vehicle);
    out.status = status_;
    return out;
  }

  Mode mode() const {
    if (estop_) return Mode::EStopped;
    return request_ == DriveRequest::Manual ? Mode::Manual : Mode::Auto;
  }
  Status status() const { return status_; }
  /// Index of the waypoint being worked on; equals the waypoint count when done.
  int current_waypoint() const { return current_wp_; }
  const planner::Trajectory& active_trajectory() const { return traj_; }
  const std::vector<WaypointRecord>& records() const { return records_; }
  const world::OccupancyGrid& known_map() const { return map_; }
  const Node& tree() const { return tree_; }
  const MissionPlan& plan() const { return plan_; }
  const std::vector<Vec2>& goals() const { return goals_; }
  int replans() const { return replans_; }
  std::size_t sensed_cells() const { return sensed_.size(); }

  std::vector<double> waypoint_errors() const {
    std::vector<double> e;
    for (const auto& r : records_) e.push_back(r.error_m);
    return e;
  }

 private:
  struct WaypointState {
    bool arrived = false;
    double t_arrived = 0.0;
    bool sample_issued = false;
    bool sample_done = false;
    bool holding = false;  ///< station keeping is driving back
  };

  void emit(std::string kind, nlohmann::json data) { events_->push_back({bb_->t, std::move(kind), std::move(data)}); }

  void apply_operator_inputs() {
    if (pending_estop_) {
      const bool engage = *pending_estop_;
      pending_estop_.reset();
      if (engage != estop_) {
        estop_ = engage;
        if (bb_->sampler)
          for (const auto& e : sampler::emergency_stop(*bb_->sampler, engage))
            emit("sampler", {{"event", sampler::event_name(e.kind)}});
        emit("mode", {{"mode", mode_name(mode())}});
      }
    }
    if (pending_mode_) {
      const DriveRequest m = *pending_mode_;
      pending_mode_.reset();
      if (m != request_) {
        request_ = m;
        emit("mode", {{"mode", mode_name(mode())}});
      }
    }
  }

  Status run_leaf(const Node& n) {
    current_wp_ = n.waypoint;
    switch (n.binding) {
      case kPlanPath: return plan_path(n.waypoint, "plan");
      case kFollowPath: return follow_path(n.waypoint);
      case kReplan: return replan(n.waypoint);
      case kCollectSample: return collect_sample(n.waypoint);
      case kReportStatus: return report_status(n.waypoint);
      default: return Status::Failure;
    }
  }

  Status plan_path(int i, const char* kind) {
    const Vec2 g = goals_[static_cast<std::size_t>(i)];
    if (field_dirty_) {
      field_ = planner::distance_field(map_);
      field_dirty_ = false;
    }
    const auto res = planner::hybrid_astar(map_, field_, bb_->est, {g.x, g.y, 0.0}, cfg_.planner);
    emit(kind, {{"waypoint", i},
                {"status", planner::plan_status_name(res.status)},
                {"expansions", res.expansions},
                {"length", res.trajectory.length()}});
    if (!res.ok()) return Status::Failure;
    const planner::CollisionChecker checker(map_, field_, cfg_.planner.footprint_radius);
    traj_ = planner::smooth(res.trajectory, checker, cfg_.smooth_iterations, cfg_.smooth_alpha,
                            cfg_.planner.max_curvature());
    // the search stops within goal tolerance; finish on the waypoint itself
    const Vec2 end = traj_.poses.back().position();
    if (distance(end, g) > 1e-9 && checker.segment_free(end, g)) {
      traj_.poses.push_back({g.x, g.y, std::atan2(g.y - end.y, g.x - end.x)});
      traj_.curvatures.push_back(0.0);
    }
    return Status::Success;
  }

  /// Success when nothing unexpected is ahead: the corridor is clear, or
  /// the remaining path still avoids everything sensed so far.
  bool obstacle_guard() const { return !bb_->roi.flag || path_clear_of_sensed(); }

  Status follow_path(int i) {
    auto& st = wp_[static_cast<std::size_t>(i)];
    if (!obstacle_guard()) {
      emit("obstacle", {{"waypoint", i}, {"range", bb_->roi.min_range}});
      return Status::Failure;
    }
    const FollowResult r = follow_controller(bb_->est, traj_, cfg_.controller);
    if (r.arrived) {
      st.arrived = true;
      st.t_arrived = bb_->t;
      emit("arrived", {{"waypoint", i}, {"distance", r.distance_to_goal}});
      return Status::Success;
    }
    auto_cmd_ = r.cmd;
    return Status::Running;
  }

  Status replan(int i) {
    if (!cfg_.replanning) {
      emit("replan", {{"waypoint", i}, {"status", "Disabled"}});
      return Status::Failure;
    }
    ++replans_;
    return plan_path(i, "replan");
  }

  void station_keep(int i) {
    auto& st = wp_[static_cast<std::size_t>(i)];
    const Vec2 g = goals_[static_cast<std::size_t>(i)];
    const double d = distance(bb_->est.position(), g);
    if (!st.holding && d > cfg_.controller.hold_rearm) st.holding = true;
    if (!st.holding) return;
    planner::Trajectory back;
    back.poses = {bb_->est, {g.x, g.y, 0.0}};
    const FollowResult r = follow_controller(bb_->est, back, cfg_.controller);
    if (r.arrived)
      st.holding = false;
    else
      auto_cmd_ = r.cmd;
  }

  Status collect_sample(int i) {
    auto& st = wp_[static_cast<std::size_t>(i)];
    const auto a = *plan_.waypoints[static_cast<std::size_t>(i)].sampling;
    station_keep(i);
    if (!bb_->sampler) return Status::Failure;
    auto& smp = *bb_->sampler;
    const auto& m = smp.motor(a.module, a.motor);
    const sampler::MotorCommand fwd{static_cast<std::uint8_t>(a.module), static_cast<std::uint8_t>(a.motor),
                                    sampler::Action::Forward};
    const bool responsive = smp.expander_responsive[smp.motor_index(a.module, a.motor)];
    if (!responsive) {
      for (const auto& e : sampler::bus_recovery(smp))
        emit("sampler", {{"event", sampler::event_name(e.kind)}, {"module", e.module}, {"motor", e.motor}});
    }
    if (!st.sample_issued || (m.phase == sampler::Phase::Filling && m.action == sampler::Action::Stop)) {
      const auto res = sampler::apply_command(smp, fwd);
      emit("sampler_command", {{"waypoint", i},
                               {"motor", sampler::motor_label(a.module, a.motor)},
                               {"result", sampler::command_result_name(res)}});
      if (res == sampler::CommandResult::Accepted) st.sample_issued = true;
      return Status::Running;
    }
    if (m.phase == sampler::Phase::Fault) {
      emit("sample_failed", {{"waypoint", i}, {"motor", sampler::motor_label(a.module, a.motor)}});
      return Status::Failure;
    }
    if (m.phase != sampler::Phase::Done) return Status::Running;
    const world::GeoPoint here = world::local_to_geo(frame_, bb_->est.position());
    for (int s = 0; s < smp.params.syringes_per_motor; ++s) {
      const auto& sy = smp.syringe(a.module, a.motor, s);
      emit("sample_record", {{"label", sy.label},
                             {"volume", sy.volume},
                             {"t_start", sy.t_start},
                             {"t_end", sy.t_end},
                             {"lat", here.lat},
                             {"lon", here.lon},
                             {"waypoint", i}});
    }
    st.sample_done = true;
    return Status::Success;
  }

  Status report_status(int i) {
    auto& st = wp_[static_cast<std::size_t>(i)];
    if (bb_->t - st.t_arrived < plan_.waypoints[static_cast<std::size_t>(i)].hold_s - 1e-9) {
      station_keep(i);
      return Status::Running;
    }
    const Vec2 g = goals_[static_cast<std::size_t>(i)];
    WaypointRecord r{i, distance(bb_->truth.position(), g), distance(bb_->est.position(), g), st.t_arrived, bb_->t};
    records_.push_back(r);
    emit("waypoint", {{"waypoint", i},
                      {"error_m", r.error_m},
                      {"est_error_m", r.est_error_m},
                      {"t_arrived", r.t_arrived}});
    current_wp_ = i + 1;
    return Status::Success;
  }

  /// Marks LiDAR returns that do not sit on or beside a mapped obstacle.
  void integrate_scan(const std::vector<double>& ranges) {
    const double res = map_.resolution();
    const int n = static_cast<int>(ranges.size());
    for (int k = 0; k < n; ++k) {
      const double r = ranges[static_cast<std::size_t>(k)];
      if (!(r < cfg_.lidar_max_range)) continue;
      const double a = bb_->est.theta + 2.0 * std::numbers::pi * k / n;
      // nudge past the cell boundary the ray entered through
      const Vec2 p = bb_->est.position() + (r + 0.25 * res) * Vec2{std::cos(a), std::sin(a)};
      const auto c = map_.world_to_cell(p);
      if (!c || map_.blocked(c->i, c->j) || near_static_obstacle(c->i, c->j)) continue;
      map_.set(c->i, c->j, world::Cell::Occupied);
      sensed_.push_back(*c);
      field_dirty_ = true;
    }
  }

  bool near_static_obstacle(int i, int j) const {
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (static_map_.in_bounds(i + di, j + dj) && static_map_.blocked(i + di, j + dj)) return true;
    return false;
  }

  bool path_clear_of_sensed() const {
    if (sensed_.empty() || traj_.poses.size() < 2) return true;
    const double res = map_.resolution();
    const double r = cfg_.planner.footprint_radius;
    const double s0 = detail::project_arc(traj_.poses, bb_->est.position());
    const double len = traj_.length();
    for (double s = s0; s <= len + 1e-9; s += 0.5 * res) {
      const Vec2 p = detail::point_at_arc(traj_.poses, s);
      const Vec2 g = map_.to_grid_coords(p);
      for (const auto& c : sensed_) {
        const double dx = g.x < c.i ? c.i - g.x : (g.x > c.i + 1 ? g.x - (c.i + 1) : 0.0);
        const double dy = g.y < c.j ? c.j - g.y : (g.y > c.j + 1 ? g.y - (c.j + 1) : 0.0);
        if (std::hypot(dx, dy) * res < r) return false;
      }
    }
    return true;
  }

  MissionPlan plan_;
  world::LocalFrame frame_;
  MissionConfig cfg_;
  world::OccupancyGrid map_;
  world::OccupancyGrid static_map_;
  planner::DistanceField field_;
  Node tree_;
  std::vector<Vec2> goals_;
  std::vector<WaypointState> wp_;
  std::vector<WaypointRecord> records_;
  std::vector<world::CellIndex> sensed_;
  planner::Trajectory traj_;
  Status status_ = Status::Running;
  int current_wp_ = 0;
  int replans_ = 0;
  bool field_dirty_ = false;
  bool estop_ = false;
  DriveRequest request_ = DriveRequest::Auto;
  std::optional<bool> pending_estop_;
  std::optional<DriveRequest> pending_mode_;
  vehicle::VelocityCommand manual_;
  vehicle::VelocityCommand auto_cmd_;
  const Blackboard* bb_ = nullptr;
  std::vector<MissionEvent>* events_ = nullptr;
};

}  // namespace hydrosim::mission
