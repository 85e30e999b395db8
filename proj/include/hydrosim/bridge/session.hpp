#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "hydrosim/bridge/store.hpp"
#include "hydrosim/core/error.hpp"
#include "hydrosim/sim/simulator.hpp"
#include "hydrosim/telemetry/messages.hpp"

namespace hydrosim::bridge {

enum class SessionState { Running, Paused, Finished };

constexpr const char* session_state_name(SessionState s) {
  switch (s) {
    case SessionState::Running: return "Running";
    case SessionState::Paused: return "Paused";
    case SessionState::Finished: return "Finished";
  }
  return "?";
}

/// A live simulation. The loop thread owns the simulator; commands and
/// reads take the same lock, so clients never see a half-finished tick.
class Session {
 public:
  using Listener = std::function<void(const nlohmann::json&)>;

  /// speed is sim seconds per wall second; 0 runs unpaced.
  Session(std::string id, sim::Scenario sc, double speed, SampleStore* store)
      : id_(std::move(id)), scenario_name_(sc.name), speed_(speed), store_(store), sim_(std::move(sc)) {
    if (!(speed >= 0)) throw Error(Errc::ConfigInvalid, "speed must be >= 0");
    sim_.set_observer([this](const nlohmann::json& rec) { observe(rec); });
  }

  ~Session() { stop(); }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void start() {
    std::lock_guard lock(mu_);
    if (thread_.joinable()) return;
    thread_ = std::thread([this] { loop(); });
  }

  /// Idempotent; a finished session stays finished.
  void stop() {
    {
      std::lock_guard lock(mu_);
      stop_requested_ = true;
      if (state_ != SessionState::Finished) state_ = SessionState::Finished;
    }
    cv_.notify_all();
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  }

  void pause(bool on) {
    {
      std::lock_guard lock(mu_);
      if (state_ == SessionState::Finished) throw Error(Errc::SessionNotRunning, "session finished");
      state_ = on ? SessionState::Paused : SessionState::Running;
    }
    cv_.notify_all();
  }

  /// Operator command through the simulated uplink.
  nlohmann::json ingest_command(const nlohmann::json& body) {
    const telemetry::Message m = telemetry::message_from_json(body);
    const auto type = telemetry::message_type(m);
    if (type != telemetry::MessageType::Command && type != telemetry::MessageType::MotorCommand &&
        type != telemetry::MessageType::EStop)
      throw Error(Errc::BadCommand, "only command, motor_command and estop are accepted");
    std::lock_guard lock(mu_);
    if (state_ != SessionState::Running) throw Error(Errc::SessionNotRunning, "session " + id_ + " is not running");
    const double d = sim_.station_distance();
    const auto o = sim_.send_uplink(m);
    nlohmann::json r{{"session", id_}, {"t", sim_.time()}, {"distance", d}};
    if (const auto* del = std::get_if<telemetry::Delivered>(&o)) {
      r["outcome"] = "Delivered";
      r["latency"] = del->latency;
    } else {
      r["outcome"] = "Dropped";
    }
    return r;
  }

  nlohmann::json info() const {
    std::lock_guard lock(mu_);
    return {{"id", id_},
            {"scenario", scenario_name_},
            {"state", session_state_name(state_)},
            {"t", sim_.time()},
            {"end_reason", sim_.end_reason()},
            {"station_distance", sim_.station_distance()}};
  }

  /// Full report once the run has ended, a live snapshot before that.
  nlohmann::json metrics() const {
    std::lock_guard lock(mu_);
    if (sim_.finished()) {
      auto j = sim::metrics_to_json(sim_.metrics());
      j["final"] = true;
      return j;
    }
    const auto& ex = sim_.executor();
    return {{"final", false},
            {"t", sim_.time()},
            {"mode", mission::mode_name(ex.mode())},
            {"mission_status", mission::status_name(ex.status())},
            {"waypoint", ex.current_waypoint()},
            {"waypoint_errors", ex.waypoint_errors()},
            {"replans", ex.replans()},
            {"soc_Wh", sim_.power().soc_Wh},
            {"downlink", telemetry::link_stats_to_json(sim_.downlink_stats())}};
  }

  SessionState state() const {
    std::lock_guard lock(mu_);
    return state_;
  }

  const std::string& id() const { return id_; }

  int subscribe(Listener f) {
    std::lock_guard lock(listeners_mu_);
    listeners_[next_listener_] = std::move(f);
    return next_listener_++;
  }

  void unsubscribe(int token) {
    std::lock_guard lock(listeners_mu_);
    listeners_.erase(token);
  }

  /// Blocks until the session ends or the timeout passes.
  bool wait_finished(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return state_ == SessionState::Finished; });
  }

  /// Runs f with the simulator locked; for read-only inspection.
  template <class F>
  auto inspect(F&& f) const {
    std::lock_guard lock(mu_);
    return f(sim_);
  }

 private:
  void loop() {
    const auto wall0 = std::chrono::steady_clock::now();
    double paused_for = 0.0;
    while (true) {
      std::unique_lock lock(mu_);
      if (state_ == SessionState::Paused) {
        const auto p0 = std::chrono::steady_clock::now();
        cv_.wait(lock, [&] { return state_ != SessionState::Paused || stop_requested_; });
        paused_for += std::chrono::duration<double>(std::chrono::steady_clock::now() - p0).count();
      }
      if (stop_requested_ || state_ == SessionState::Finished) break;
      sim_.step();
      const double t = sim_.time();
      if (sim_.finished()) {
        state_ = SessionState::Finished;
        lock.unlock();
        cv_.notify_all();
        break;
      }
      lock.unlock();
      if (speed_ > 0) {
        const auto due = wall0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(t / speed_ + paused_for));
        std::this_thread::sleep_until(due);
      }
    }
  }

  // Called from inside sim_.step() with mu_ held.
  void observe(const nlohmann::json& rec) {
    if (rec.at("type") != "rx" || rec.value("link", "") != "downlink") return;
    const auto& msg = rec.at("msg");
    if (msg.at("type") == "sample_record" && store_) {
      SampleRecord r;
      r.mission = id_;
      r.label = msg.at("label").get<std::string>();
      r.volume = msg.at("volume").get<double>();
      r.t_start = msg.at("t_start").get<double>();
      r.t_end = msg.at("t_end").get<double>();
      r.lat = msg.at("lat").get<double>();
      r.lon = msg.at("lon").get<double>();
      try {
        store_->record_sample(r);
      } catch (const Error&) {
        // a resent record is already in the journal
      }
    }
    nlohmann::json out = msg;
    out["session"] = id_;
    out["seq"] = rec.at("seq");
    std::lock_guard lock(listeners_mu_);
    for (auto& [k, f] : listeners_) f(out);
  }

  std::string id_;
  std::string scenario_name_;
  double speed_;
  SampleStore* store_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  sim::Simulator sim_;
  SessionState state_ = SessionState::Running;
  bool stop_requested_ = false;
  std::thread thread_;
  std::mutex listeners_mu_;
  std::map<int, Listener> listeners_;
  int next_listener_ = 0;
};

class SessionManager {
 public:
  SessionManager(SampleStore& store, std::filesystem::path scenario_root = ".", int max_running = 1)
      : store_(store), root_(std::move(scenario_root)), max_running_(max_running) {}

  ~SessionManager() {
    std::map<std::string, std::shared_ptr<Session>> all;
    {
      std::lock_guard lock(mu_);
      all.swap(sessions_);
    }
    for (auto& [id, s] : all) s->stop();
  }

  /// body: {scenario: "file.json" | {...}, seed?, speed?}
  std::shared_ptr<Session> start(const nlohmann::json& body) {
    std::optional<std::uint64_t> seed;
    double speed = 1.0;
    nlohmann::json source;
    try {
      if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
      speed = body.value("speed", 1.0);
      source = body.at("scenario");
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ConfigInvalid, std::string("session: ") + e.what());
    }
    sim::Scenario sc = source.is_string() ? sim::load_scenario(root_ / source.get<std::string>(), seed)
                                        : sim::scenario_from_json(source, root_, seed);
    std::lock_guard lock(mu_);
    int running = 0;
    for (const auto& [id, s] : sessions_) running += s->state() != SessionState::Finished;
    if (running >= max_running_) throw Error(Errc::Conflict, "a session is already running");
    auto s = std::make_shared<Session>("s" + std::to_string(++counter_), std::move(sc), speed, &store_);
    sessions_[s->id()] = s;
    s->start();
    return s;
  }

  void stop(const std::string& id) { get(id)->stop(); }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(Errc::NotFound, "no session " + id);
    return it->second;
  }

  /// The most recently started session that is still running, if any.
  std::shared_ptr<Session> current() const {
    std::lock_guard lock(mu_);
    std::shared_ptr<Session> best;
    for (const auto& [id, s] : sessions_)
      if (s->state() != SessionState::Finished) best = s;
    return best;
  }

  nlohmann::json list() const {
    std::lock_guard lock(mu_);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, s] : sessions_) out.push_back(s->info());
    return out;
  }

 private:
  SampleStore& store_;
  std::filesystem::path root_;
  int max_running_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int counter_ = 0;
};

}  // namespace hydrosim::bridge
