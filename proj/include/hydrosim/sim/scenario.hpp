#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"
#include "hydrosim/localization/ekf.hpp"
#include "hydrosim/mission/executor.hpp"
#include "hydrosim/mission/plan.hpp"
#include "hydrosim/power/power.hpp"
#include "hydrosim/sampler/sampler.hpp"
#include "hydrosim/telemetry/link.hpp"
#include "hydrosim/vehicle/dynamics.hpp"
#include "hydrosim/vehicle/sensors.hpp"
#include "hydrosim/world/geo.hpp"
#include "hydrosim/world/image.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

namespace hydrosim::sim {

enum class PowerMode {
  Average,  ///< constant draw from the load profile
  Dynamic,  ///< thrusters scale with commanded speed, sampler with running motors
};

/// What counts as a successful run.
enum class RunGoal {
  Mission,    ///< the mission tree succeeds
  Endurance,  ///< the battery runs out before max_duration
};

struct SensorRates {
  double gnss_hz = 1.0;
  double lidar_hz = 10.0;
  double telemetry_hz = 1.0;
  double state_log_hz = 5.0;
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  ///< local frame, m
};

struct Scenario {
  std::string name;
  nlohmann::json source;  ///< normalized input, written to the log header
  std::uint64_t seed = 1;
  double dt = 0.02;
  double max_duration = 3600.0;
  RunGoal goal = RunGoal::Mission;

  world::GeoPoint origin;
  world::OccupancyGrid known_map;  ///< what the planner starts from
  world::OccupancyGrid true_map;   ///< what the sensors see
  mission::MissionPlan plan;
  Pose2 start;
  Vec2 station;  ///< ground station, local frame

  mission::MissionConfig mission;
  sampler::SamplerParams sampler;
  sampler::FaultModel faults;
  vehicle::DisturbanceModel disturbance;
  vehicle::SensorNoise sensors;
  localization::ProcessNoise process_noise;
  telemetry::LinkModel link;
  power::PowerParams power;
  power::LoadProfile load;
  PowerMode power_mode = PowerMode::Average;
  double solar_W = 0.0;
  SensorRates rates;
  int lidar_beams = 180;
  double retrieval_delay = 0.0;  ///< s of leakage after the mission ends

  /// Ticks between events of a given rate; at least one.
  int decimation(double hz) const { return std::max(1, static_cast<int>(std::lround(1.0 / (hz * dt)))); }
};

namespace detail {

inline std::string read_text_file(const std::filesystem::path& p, Errc code) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(code, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json_file(const std::filesystem::path& p, Errc code) {
  try {
    return nlohmann::json::parse(read_text_file(p, code));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, p.string() + ": " + e.what());
  }
}

inline void paint(world::OccupancyGrid& g, const Rect& r) {
  for (int j = 0; j < g.height(); ++j)
    for (int i = 0; i < g.width(); ++i) {
      const Vec2 c = g.from_grid_coords({i + 0.5, j + 0.5});
      if (c.x >= r.x0 && c.x <= r.x1 && c.y >= r.y0 && c.y <= r.y1) g.set(i, j, world::Cell::Occupied);
    }
}

inline Rect rect_from_json(const nlohmann::json& j) {
  Rect r{j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("x1").get<double>(), j.at("y1").get<double>()};
  if (!(r.x0 <= r.x1 && r.y0 <= r.y1)) throw Error(Errc::ConfigInvalid, "obstacle rectangle corners out of order");
  return r;
}

inline Pose2 pose_from_json(const nlohmann::json& j) {
  return {j.value("x", 0.0), j.value("y", 0.0), j.value("theta", 0.0)};
}

/// map: {file: grid.json} | {pgm: image.pgm, preprocess: {...}} |
/// {empty: {width_m, height_m, resolution, origin}}
inline world::OccupancyGrid load_map(const nlohmann::json& m, const std::filesystem::path& base) {
  if (m.contains("file")) return world::grid_from_json(read_json_file(base / m.at("file").get<std::string>(), Errc::MapLoadFailed));
  if (m.contains("pgm")) {
    const auto bytes = read_text_file(base / m.at("pgm").get<std::string>(), Errc::MapLoadFailed);
    world::GrayImage img;
    try {
      img = world::load_pgm(bytes);
    } catch (const Error& e) {
      throw Error(Errc::MapLoadFailed, e.what());
    }
    const auto pp = m.value("preprocess", nlohmann::json::object());
    world::PreprocessParams p;
    p.canny.low = pp.value("canny_low", p.canny.low);
    p.canny.high = pp.value("canny_high", p.canny.high);
    p.canny.sigma = pp.value("sigma", p.canny.sigma);
    p.erode_radius = pp.value("erode_radius", p.erode_radius);
    p.resolution = pp.value("resolution", p.resolution);
    if (pp.contains("origin")) p.origin = pose_from_json(pp.at("origin"));
    return world::preprocess_map(img, p);
  }
  if (m.contains("empty")) {
    const auto& e = m.at("empty");
    const double res = e.value("resolution", 0.25);
    if (!(res > 0)) throw Error(Errc::ConfigInvalid, "map resolution must be > 0");
    const int w = static_cast<int>(std::ceil(e.at("width_m").get<double>() / res));
    const int h = static_cast<int>(std::ceil(e.at("height_m").get<double>() / res));
    return world::OccupancyGrid(w, h, res, pose_from_json(e.value("origin", nlohmann::json::object())));
  }
  throw Error(Errc::ConfigInvalid, "map needs one of file, pgm, empty");
}

}  // namespace detail

/// Builds a scenario from JSON; relative file references resolve against
/// `base`. A seed given here overrides the file's.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base = ".",
                                   std::optional<std::uint64_t> seed = std::nullopt) {
  Scenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    s.seed = seed.value_or(j.value("seed", std::uint64_t{1}));
    s.dt = j.value("dt", s.dt);
    s.max_duration = j.value("max_duration", s.max_duration);
    if (!(s.dt > 0)) throw Error(Errc::ConfigInvalid, "dt must be > 0");
    if (!(s.max_duration > 0)) throw Error(Errc::ConfigInvalid, "max_duration must be > 0");
    const auto goal = j.value("goal", std::string("mission"));
    if (goal == "mission") s.goal = RunGoal::Mission;
    else if (goal == "endurance") s.goal = RunGoal::Endurance;
    else throw Error(Errc::ConfigInvalid, "goal must be mission or endurance");

    const auto& o = j.at("origin");
    s.origin = {o.at("lat").get<double>(), o.at("lon").get<double>()};
    (void)world::make_local_frame(s.origin);

    const auto& m = j.at("map");
    s.known_map = detail::load_map(m, base);
    for (const auto& r : m.value("obstacles", nlohmann::json::array())) detail::paint(s.known_map, detail::rect_from_json(r));
    s.true_map = s.known_map;
    for (const auto& r : m.value("hidden_obstacles", nlohmann::json::array()))
      detail::paint(s.true_map, detail::rect_from_json(r));

    s.sampler = sampler::sampler_params_from_json(j.value("sampler", nlohmann::json::object()));
    if (j.contains("mission_file")) {
      s.plan = mission::plan_from_json(
          detail::read_json_file(base / j.at("mission_file").get<std::string>(), Errc::ConfigInvalid), s.sampler);
    } else {
      s.plan = mission::plan_from_json(j.at("mission"), s.sampler);
    }
    s.start = detail::pose_from_json(j.value("start", nlohmann::json::object()));
    if (!s.true_map.contains(s.start.position())) throw Error(Errc::ConfigInvalid, "start pose outside the map");
    const auto st = j.value("station", nlohmann::json::object());
    s.station = {st.value("x", 0.0), st.value("y", 0.0)};

    s.mission.controller = mission::controller_params_from_json(j.value("controller", nlohmann::json::object()));
    s.mission.planner =
        planner::params_from_json(j.value("planner", nlohmann::json::object()), mission::mission_planner_defaults());
    s.mission.vehicle = vehicle::vehicle_params_from_json(j.value("vehicle", nlohmann::json::object()));
    s.mission.replanning = j.value("replanning", true);
    s.faults = sampler::fault_model_from_json(j.value("faults", nlohmann::json("none")));
    s.disturbance = vehicle::disturbance_from_json(j.value("disturbance", nlohmann::json::object()));
    s.sensors = vehicle::sensor_noise_from_json(j.value("sensors", nlohmann::json::object()));
    s.link = telemetry::link_model_from_json(j.value("link", nlohmann::json::object()));

    const auto pw = j.value("power", nlohmann::json::object());
    s.power = power::power_params_from_json(pw.value("params", nlohmann::json::object()));
    s.load = power::load_profile_from_json(pw.value("load", nlohmann::json::object()));
    const auto mode = pw.value("mode", std::string("average"));
    if (mode == "average") s.power_mode = PowerMode::Average;
    else if (mode == "dynamic") s.power_mode = PowerMode::Dynamic;
    else throw Error(Errc::ConfigInvalid, "power mode must be average or dynamic");
    s.solar_W = pw.value("solar_W", 0.0);
    if (!(s.solar_W >= 0)) throw Error(Errc::ConfigInvalid, "solar_W must be >= 0");

    const auto r = j.value("rates", nlohmann::json::object());
    s.rates.gnss_hz = r.value("gnss_hz", s.rates.gnss_hz);
    s.rates.lidar_hz = r.value("lidar_hz", s.rates.lidar_hz);
    s.rates.telemetry_hz = r.value("telemetry_hz", s.rates.telemetry_hz);
    s.rates.state_log_hz = r.value("state_log_hz", s.rates.state_log_hz);
    for (double hz : {s.rates.gnss_hz, s.rates.lidar_hz, s.rates.telemetry_hz, s.rates.state_log_hz})
      if (!(hz > 0)) throw Error(Errc::ConfigInvalid, "rates must be > 0");
    s.lidar_beams = j.value("lidar_beams", s.lidar_beams);
    if (s.lidar_beams < 1) throw Error(Errc::ConfigInvalid, "lidar_beams must be >= 1");
    s.retrieval_delay = j.value("retrieval_delay", 0.0);
    if (!(s.retrieval_delay >= 0)) throw Error(Errc::ConfigInvalid, "retrieval_delay must be >= 0");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::MapLoadFailed || e.code() == Errc::ConfigInvalid) throw;
    throw Error(Errc::ConfigInvalid, e.what());
  }
  s.source = j;
  s.source["seed"] = s.seed;
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed = std::nullopt) {
  const auto j = detail::read_json_file(path, Errc::ConfigInvalid);
  return scenario_from_json(j, path.parent_path(), seed);
}

}  // namespace hydrosim::sim
