#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hydrosim/bridge/api.hpp"
#include "hydrosim/bridge/server.hpp"
#include "hydrosim/planner/hybrid_astar.hpp"
#include "hydrosim/planner/smoother.hpp"
#include "hydrosim/sampler/calibration.hpp"
#include "hydrosim/sampler/sampler.hpp"
#include "hydrosim/sim/log.hpp"
#include "hydrosim/sim/metrics.hpp"
#include "hydrosim/sim/simulator.hpp"
#include "hydrosim/world/image.hpp"
#include "hydrosim/world/occupancy_grid.hpp"

using namespace hydrosim;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissionFailed = 3;

bool is_config_error(Errc c) {
  switch (c) {
    case Errc::ConfigInvalid:
    case Errc::MapLoadFailed:
    case Errc::InvalidPlan:
    case Errc::BadMagic:
    case Errc::TruncatedData:
    case Errc::MaxvalUnsupported:
    case Errc::OutOfRange:
    case Errc::UnknownParameter: return true;
    default: return false;
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::Io, "cannot write " + p.string());
}

std::string read_file(const fs::path& p) { return sim::detail::read_text_file(p, Errc::ConfigInvalid); }

Pose2 parse_pose(const std::string& s) {
  Pose2 p;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> p.x >> c1 >> p.y) || c1 != ',') throw Error(Errc::ConfigInvalid, "pose must be x,y[,theta]: " + s);
  if (in >> c2) {
    if (c2 != ',' || !(in >> p.theta)) throw Error(Errc::ConfigInvalid, "pose must be x,y[,theta]: " + s);
  }
  return p;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots)), b = std::stoull(s.substr(dots + 2));
    if (b < a) throw Error(Errc::ConfigInvalid, "seed range is empty: " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw Error(Errc::ConfigInvalid, "seeds must look like A..B: " + s);
  }
}

void print_summary(const sim::MetricsReport& m) {
  std::cout << "end: " << m.end_reason << " at t=" << std::fixed << std::setprecision(2) << m.t_end << " s\n";
  if (m.waypoints)
    std::cout << "waypoints: " << m.waypoints->attempted << " at " << m.waypoints->precision_pct << "% precision, mean error "
              << m.waypoints->mean_err_m << " m\n";
  if (!m.syringes.empty()) std::cout << "syringes: " << m.syringes.size() << "\n";
  if (m.endurance.depleted_at_s) std::cout << "depleted at: " << *m.endurance.depleted_at_s / 60.0 << " min\n";
  std::cout << "replans: " << m.replans << "\n";
}

int cmd_run(const std::string& scenario, std::optional<std::uint64_t> seed, const std::string& out) {
  const auto sc = sim::load_scenario(scenario, seed);
  const auto r = sim::run(sc);
  if (!out.empty()) {
    fs::create_directories(out);
    write_file(fs::path(out) / "log.jsonl", r.log_text);
    write_file(fs::path(out) / "metrics.json", sim::metrics_to_json(r.metrics).dump(2) + "\n");
    write_file(fs::path(out) / "syringes.csv", sim::syringes_csv(r.metrics));
    write_file(fs::path(out) / "timeseries.csv", sim::timeseries_csv(sim::parse_log(r.log_text)));
  }
  print_summary(r.metrics);
  std::cout << "hash: " << r.hash << "\n";
  return r.metrics.success ? kExitOk : kExitMissionFailed;
}

int cmd_metrics(const std::string& log) {
  const auto m = sim::metrics_from_log(sim::read_log(log));
  std::cout << sim::metrics_to_json(m).dump(2) << "\n";
  return kExitOk;
}

int cmd_replay(const std::string& log, double rate) {
  if (!(rate >= 0)) throw Error(Errc::ConfigInvalid, "rate must be >= 0");
  const auto recs = sim::read_log(log);
  sim::replay(recs, rate, [](const nlohmann::json& rec) {
    std::cout << rec.dump() << "\n";
    return static_cast<bool>(std::cout);
  });
  return kExitOk;
}

int cmd_sweep(const std::string& scenario, const std::string& seeds, int jobs) {
  const auto [a, b] = parse_seed_range(seeds);
  const auto base = sim::load_scenario(scenario);  // fail fast on config errors
  const std::size_t n = static_cast<std::size_t>(b - a + 1);
  std::vector<sim::RunResult> results(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) results[i] = sim::run(sim::load_scenario(scenario, a + i));
    });
  for (auto& t : pool) t.join();

  std::size_t ok = 0;
  std::cout << "seed,end_reason,success,waypoint_precision_pct,replans,t_end,hash\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = results[i].metrics;
    ok += m.success;
    std::cout << a + i << "," << m.end_reason << "," << (m.success ? 1 : 0) << ","
              << (m.waypoints ? m.waypoints->precision_pct : 0.0) << "," << m.replans << "," << m.t_end << ","
              << results[i].hash << "\n";
  }
  std::cerr << ok << "/" << n << " runs succeeded (" << base.name << ")\n";
  return ok == n ? kExitOk : kExitMissionFailed;
}

int cmd_map_preprocess(const std::string& in, const std::string& out, world::PreprocessParams p) {
  const auto img = world::load_pgm(read_file(in));
  const auto grid = world::preprocess_map(img, p);
  const std::string text = world::grid_to_json(grid).dump() + "\n";
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  const auto occupied = std::count(grid.cells().begin(), grid.cells().end(), world::Cell::Occupied);
  std::cerr << grid.width() << "x" << grid.height() << " cells, " << occupied << " occupied\n";
  return kExitOk;
}

int cmd_plan(const std::string& grid_path, const std::string& start, const std::string& goal,
             const std::string& params_path, const std::string& out, int smooth_iters) {
  const auto grid = world::grid_from_json(sim::detail::read_json_file(grid_path, Errc::MapLoadFailed));
  planner::PlannerParams params;
  if (!params_path.empty()) params = planner::params_from_json(sim::detail::read_json_file(params_path, Errc::ConfigInvalid));
  params.validate();
  auto r = planner::hybrid_astar(grid, parse_pose(start), parse_pose(goal), params);
  std::cerr << planner::plan_status_name(r.status) << " after " << r.expansions << " expansions\n";
  if (!r.ok()) return kExitMissionFailed;
  if (smooth_iters > 0) r.trajectory = planner::smooth(r.trajectory, grid, smooth_iters, 0.1, params);
  const std::string text = planner::trajectory_to_json(r.trajectory).dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return kExitOk;
}

int cmd_sample(const std::string& module, int motor, const std::string& action, const std::string& faults,
               std::optional<int> cycles, std::uint64_t seed) {
  const auto fm = sampler::fault_model_from_json(faults);
  if (cycles) {
    const auto c = sampler::run_calibration(fm, *cycles, seed);
    std::cout << nlohmann::json{{"cycles", c.cycles},
                                {"mean_fill_time_s", c.mean_fill_time},
                                {"mean_volume_mL", c.mean_volume},
                                {"mean_loss_pct", c.mean_loss_pct},
                                {"timeouts", c.timeouts}}
                     .dump(2)
              << "\n";
    return kExitOk;
  }
  const sampler::SamplerParams sp;
  const auto [mod, mot] = sampler::parse_motor_label(module + std::to_string(motor), sp);
  const sampler::MotorCommand cmd{static_cast<std::uint8_t>(mod), static_cast<std::uint8_t>(mot),
                                  sampler::action_from_name(action)};
  const auto bytes = sampler::encode_motor_command(cmd);
  std::cout << "frame payload: " << std::hex << std::setfill('0');
  for (auto b : bytes) std::cout << std::setw(2) << static_cast<int>(b) << ' ';
  std::cout << std::dec << std::setfill(' ') << "\n";

  // one cycle on a fresh sampler
  sampler::SamplerState st(sp);
  std::cout << "result: " << sampler::command_result_name(sampler::apply_command(st, cmd)) << "\n";
  CounterRng rng = RngFactory(seed).stream("sampler", 0);
  for (double t = 0; t < 300.0; t += 0.1) {
    bool done = false;
    for (const auto& e : sampler::step_sampler(st, 0.1, fm, rng)) {
      std::cout << std::fixed << std::setprecision(1) << e.t << " s  " << sampler::event_name(e.kind) << "\n";
      done |= e.kind == sampler::EventKind::CycleComplete || e.kind == sampler::EventKind::SwitchTimeout;
    }
    if (done || cmd.action != sampler::Action::Forward) break;
  }
  for (const auto& s : st.syringes)
    if (s.volume > 0) std::cout << s.label << ": " << std::setprecision(2) << s.volume << " mL\n";
  return kExitOk;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const std::string& address, unsigned short port, const std::string& scenario,
              const std::optional<std::string>& data_dir, double speed, int max_sessions) {
  const fs::path dir = bridge::resolve_data_dir(data_dir);
  bridge::SampleStore store(dir);
  const fs::path root = scenario.empty() ? fs::current_path() : fs::absolute(scenario).parent_path();
  bridge::SessionManager sessions(store, root, max_sessions);
  bridge::BridgeApi api(sessions, store);
  if (!scenario.empty()) {
    const auto s = sessions.start({{"scenario", fs::path(scenario).filename().string()}, {"speed", speed}});
    std::cerr << "session " << s->id() << " started\n";
  }
  bridge::Server server(api, address, port);
  server.start();
  std::cerr << "listening on " << address << ":" << server.port() << ", data in " << dir.string() << "\n";
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hydrosim: USV sampling mission simulator and ground-station bridge"};
  app.require_subcommand(1);

  std::string scenario, out, log;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run a scenario to completion");
  run->add_option("scenario", scenario, "scenario JSON")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out, "write log.jsonl, metrics.json, syringes.csv, timeseries.csv here");

  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a log");
  metrics->add_option("log", log, "log.jsonl")->required();

  double rate = 1.0;
  auto* replay = app.add_subcommand("replay", "stream a log to stdout at sim time x rate (0 = instant)");
  replay->add_option("log", log, "log.jsonl")->required();
  replay->add_option("--rate", rate, "playback rate")->capture_default_str();

  std::string seeds;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "run a scenario over a seed range");
  sweep->add_option("scenario", scenario, "scenario JSON")->required();
  sweep->add_option("--seeds", seeds, "A..B inclusive")->required();
  sweep->add_option("--jobs", jobs, "parallel runs")->capture_default_str();

  auto* map = app.add_subcommand("map", "map tools");
  map->require_subcommand(1);
  std::string pgm;
  world::PreprocessParams pp;
  auto* pre = map->add_subcommand("preprocess", "PGM image to occupancy grid");
  pre->add_option("image", pgm, "P2/P5 PGM")->required();
  pre->add_option("--low", pp.canny.low, "edge hysteresis low")->capture_default_str();
  pre->add_option("--high", pp.canny.high, "edge hysteresis high")->capture_default_str();
  pre->add_option("--sigma", pp.canny.sigma, "blur sigma")->capture_default_str();
  pre->add_option("--erode", pp.erode_radius, "free-space erosion radius, cells")->capture_default_str();
  pre->add_option("--resolution", pp.resolution, "m per cell")->capture_default_str();
  pre->add_option("--out", out, "grid JSON (stdout if omitted)");

  std::string grid, start, goal, params;
  int smooth_iters = 0;
  auto* plan = app.add_subcommand("plan", "plan a path on a grid");
  plan->add_option("--grid", grid, "grid JSON")->required();
  plan->add_option("--start", start, "x,y,theta")->required();
  plan->add_option("--goal", goal, "x,y,theta")->required();
  plan->add_option("--params", params, "planner params JSON");
  plan->add_option("--smooth", smooth_iters, "smoothing iterations")->capture_default_str();
  plan->add_option("--out", out, "trajectory JSON (stdout if omitted)");

  std::string module = "A", action = "forward", faults = "none";
  int motor = 1;
  std::optional<int> cycles;
  std::uint64_t sample_seed = 1;
  auto* sample = app.add_subcommand("sample", "drive one sampler motor, or run a calibration batch");
  sample->add_option("--module", module, "A..F")->capture_default_str();
  sample->add_option("--motor", motor, "1..4")->capture_default_str();
  sample->add_option("--action", action, "forward | reverse | stop")->capture_default_str();
  sample->add_option("--faults", faults, "none | calibrated")->capture_default_str();
  sample->add_option("--calibrate", cycles, "run N calibration cycles instead");
  sample->add_option("--seed", sample_seed)->capture_default_str();

  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::optional<std::string> data_dir;
  double speed = 1.0;
  int max_sessions = 1;
  auto* serve = app.add_subcommand("serve", "ground-station bridge (HTTP + WebSocket)");
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
  serve->add_option("--address", address)->capture_default_str();
  serve->add_option("--scenario", scenario, "start a session from this file; its directory is the scenario root");
  serve->add_option("--data-dir", data_dir, "journal directory (else HYDROSIM_DATA, else ./hydrosim-data)");
  serve->add_option("--speed", speed, "sim seconds per wall second, 0 = unpaced")->capture_default_str();
  serve->add_option("--max-sessions", max_sessions, "concurrent running sessions")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(scenario, seed, out);
    if (*metrics) return cmd_metrics(log);
    if (*replay) return cmd_replay(log, rate);
    if (*sweep) return cmd_sweep(scenario, seeds, jobs);
    if (*pre) return cmd_map_preprocess(pgm, out, pp);
    if (*plan) return cmd_plan(grid, start, goal, params, out, smooth_iters);
    if (*sample) return cmd_sample(module, motor, action, faults, cycles, sample_seed);
    if (*serve) return cmd_serve(address, port, scenario, data_dir, speed, max_sessions);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e.code()) ? kExitConfig : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}
