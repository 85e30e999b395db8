#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/rng.hpp"
#include "hydrosim/localization/ekf.hpp"
#include "hydrosim/mission/executor.hpp"
#include "hydrosim/power/power.hpp"
#include "hydrosim/sampler/sampler.hpp"
#include "hydrosim/sim/log.hpp"
#include "hydrosim/sim/metrics.hpp"
#include "hydrosim/sim/scenario.hpp"
#include "hydrosim/telemetry/link.hpp"
#include "hydrosim/telemetry/messages.hpp"
#include "hydrosim/vehicle/dynamics.hpp"
#include "hydrosim/vehicle/sensors.hpp"

namespace hydrosim::sim {

inline std::uint8_t mode_code(mission::Mode m) {
  switch (m) {
    case mission::Mode::Auto: return 0;
    case mission::Mode::Manual: return 1;
    case mission::Mode::EStopped: return 2;
  }
  return 0;
}

inline std::uint8_t status_code(mission::Status s) {
  switch (s) {
    case mission::Status::Running: return 0;
    case mission::Status::Success: return 1;
    case mission::Status::Failure: return 2;
  }
  return 0;
}

inline nlohmann::json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

/// Fixed-step loop. Each tick: sensors, EKF, operator uplink, mission tick,
/// mixer, dynamics, sampler, power, telemetry, in that order. Not thread
/// safe; one owner drives it.
class Simulator {
 public:
  explicit Simulator(Scenario sc)
      : sc_(std::move(sc)),
        rngs_(sc_.seed),
        frame_(world::make_local_frame(sc_.origin)),
        exec_(sc_.plan, sc_.known_map, frame_, sc_.mission, sc_.sampler),
        sampler_(sc_.sampler),
        power_(power::full_state(sc_.power)),
        downlink_(sc_.link, rngs_.stream("link.downlink")),
        uplink_(sc_.link, rngs_.stream("link.uplink")),
        rng_dist_(rngs_.stream("vehicle.disturbance")),
        rng_gnss_(rngs_.stream("sensors.gnss")),
        rng_imu_(rngs_.stream("sensors.imu")),
        rng_sampler_(rngs_.stream("sampler")) {
    sc_.faults.validate();
    sc_.disturbance.validate();
    sc_.load.validate();
    truth_.pose = sc_.start;
    prev_truth_ = truth_;
    est_.mean << sc_.start.x, sc_.start.y, sc_.start.theta, 0.0;
    est_.P = localization::Vector4(1e-4, 1e-4, 1e-4, 1e-4).asDiagonal();
    gnss_div_ = sc_.decimation(sc_.rates.gnss_hz);
    lidar_div_ = sc_.decimation(sc_.rates.lidar_hz);
    tel_div_ = sc_.decimation(sc_.rates.telemetry_hz);
    state_div_ = sc_.decimation(sc_.rates.state_log_hz);
  }

  /// Must be set before the first step to see the header.
  void set_observer(SimLog::Observer f) { log_.set_observer(std::move(f)); }

  bool finished() const { return finished_; }
  double time() const { return t_; }
  std::uint64_t ticks() const { return k_; }

  void step() {
    if (finished_) return;
    if (k_ == 0) write_header();
    t_ = static_cast<double>(k_) * sc_.dt;
    try {
      tick();
    } catch (const Error& e) {
      if (e.code() != Errc::PoseOutOfBounds) throw;
      log_.append("fault", t_, {{"error", e.what()}});
      finish("out_of_bounds");
      return;
    }
    ++k_;
    if (!finished_ && static_cast<double>(k_) * sc_.dt >= sc_.max_duration - 1e-9) {
      t_ = static_cast<double>(k_) * sc_.dt;
      finish("max_duration");
    }
  }

  void run() {
    while (!finished_) step();
  }

  /// Frames an operator message and puts it on the uplink at the current
  /// vehicle-station distance. Applied at the first tick at or after its
  /// delivery time.
  telemetry::LinkOutcome send_uplink(const telemetry::Message& m) {
    const std::uint16_t seq = uplink_seq_.next();
    const double d = station_distance();
    auto o = uplink_.send(telemetry::encode_message(m, seq), seq, t_, d);
    nlohmann::json rec{{"link", "uplink"}, {"seq", seq}, {"distance", d}, {"msg", telemetry::message_to_json(m)}};
    if (const auto* del = std::get_if<telemetry::Delivered>(&o)) {
      rec["outcome"] = "delivered";
      rec["latency"] = del->latency;
    } else {
      rec["outcome"] = "dropped";
    }
    log_.append("tx", t_, std::move(rec));
    return o;
  }

  double station_distance() const { return distance(truth_.pose.position(), sc_.station); }

  const Scenario& scenario() const { return sc_; }
  const SimLog& log() const { return log_; }
  const vehicle::TrueState& truth() const { return truth_; }
  const localization::StateEstimate& estimate() const { return est_; }
  const mission::MissionExecutor& executor() const { return exec_; }
  const sampler::SamplerState& sampler() const { return sampler_; }
  const power::PowerState& power() const { return power_; }
  const vehicle::VelocityCommand& last_command() const { return cmd_; }
  const std::string& end_reason() const { return end_reason_; }
  bool success() const { return success_; }
  const telemetry::LinkStats& downlink_stats() const { return downlink_.stats(); }

  MetricsReport metrics() const { return metrics_from_log(parse_log(log_.text())); }

 private:
  void write_header() {
    log_.append("header", 0.0,
                {{"name", sc_.name},
                 {"seed", sc_.seed},
                 {"dt", sc_.dt},
                 {"scenario", sc_.source},
                 {"capacity_mL", sc_.sampler.capacity},
                 {"reporting_baseline_s", sc_.sampler.reporting_baseline},
                 {"wp_hit_threshold", sc_.mission.controller.wp_hit_threshold},
                 {"E_use_Wh", sc_.power.E_use}});
  }

  void tick() {
    // sensors and estimation
    if (k_ > 0) {
      const auto [yaw_rate, accel] = vehicle::imu_measurement(prev_truth_, truth_, sc_.dt, sc_.sensors, rng_imu_);
      est_ = localization::predict(est_, {yaw_rate, accel, sc_.dt}, sc_.process_noise);
    }
    if (k_ % gnss_div_ == 0) {
      localization::GnssFix fix;
      const Vec2 z = vehicle::gnss_measurement(truth_, sc_.sensors, rng_gnss_);
      fix.z << z.x, z.y;
      const double var = std::max(sc_.sensors.gnss_sigma * sc_.sensors.gnss_sigma, 1e-6);
      fix.R = localization::Matrix2::Identity() * var;
      est_ = localization::update_gnss(est_, fix);
    }
    const bool fresh_scan = k_ % lidar_div_ == 0;
    if (fresh_scan) {
      scan_ = vehicle::raycast_lidar(truth_.pose, sc_.true_map, sc_.lidar_beams, sc_.mission.lidar_max_range);
      roi_ = vehicle::roi_obstacle(truth_.pose, sc_.true_map);
    }

    // operator traffic due now
    for (const auto& bytes : uplink_.receive(t_)) apply_uplink(bytes);

    // decision and control
    mission::Blackboard bb;
    bb.t = t_;
    bb.est = est_.pose();
    bb.truth = truth_.pose;
    bb.roi = roi_;
    bb.scan = fresh_scan ? &scan_ : nullptr;
    bb.sampler = &sampler_;
    auto out = exec_.tick(bb);
    cmd_ = out.cmd;
    for (auto& e : out.events) {
      nlohmann::json rec = e.data.is_object() ? e.data : nlohmann::json{{"data", e.data}};
      if (e.kind == "sample_record") {
        sampled_.push_back(rec.at("label").get<std::string>());
        send_downlink(telemetry::SampleRecordMsg{rec.at("label").get<std::string>(),
                                                 static_cast<float>(rec.at("volume").get<double>()),
                                                 static_cast<float>(rec.at("t_start").get<double>()),
                                                 static_cast<float>(rec.at("t_end").get<double>()),
                                                 rec.at("lat").get<double>(), rec.at("lon").get<double>()});
      }
      log_.append(e.kind, t_, std::move(rec));
    }

    const vehicle::ThrusterSpeeds target = vehicle::mix(cmd_, sc_.mission.vehicle.B);
    prev_truth_ = truth_;
    truth_ = vehicle::step_dynamics(truth_, target, sc_.disturbance, sc_.mission.vehicle, sc_.dt, rng_dist_);

    for (const auto& e : sampler::step_sampler(sampler_, sc_.dt, sc_.faults, rng_sampler_))
      log_.append("sampler", t_, {{"event", sampler::event_name(e.kind)}, {"module", e.module}, {"motor", e.motor}});

    const auto ps = power::step_power(power_, load_W(), sc_.solar_W, sc_.dt, sc_.power);
    energy_used_Wh_ += power_.soc_Wh - ps.state.soc_Wh;
    power_ = ps.state;

    if (k_ % tel_div_ == 0) send_downlink(telemetry_message());
    for (const auto& bytes : downlink_.receive(t_ + sc_.dt)) {
      const auto d = telemetry::decode_message(bytes);
      log_.append("rx", t_, {{"link", "downlink"}, {"seq", d.seq}, {"msg", telemetry::message_to_json(d.message)}});
    }

    if (k_ % state_div_ == 0) {
      const auto& m = est_.mean;
      log_.append("state", t_,
                  {{"truth", pose_json(truth_.pose)},
                   {"est", {{"x", m(0)}, {"y", m(1)}, {"theta", m(2)}, {"v", m(3)}}},
                   {"cmd", {{"v_x", cmd_.v_x}, {"w_z", cmd_.w_z}}},
                   {"thrust", {{"left", target.left}, {"right", target.right}}},
                   {"power", {{"soc_Wh", power_.soc_Wh}, {"V", power_.V}, {"I", power_.I}}},
                   {"mode", mission::mode_name(exec_.mode())},
                   {"waypoint", exec_.current_waypoint()}});
    }

    if (ps.depleted_now) {
      log_.append("depleted", t_, {{"soc_Wh", power_.soc_Wh}});
      finish("depleted");
      return;
    }
    if (out.status != mission::Status::Running)
      finish(out.status == mission::Status::Success ? "mission_complete" : "mission_failed");
  }

  double load_W() const {
    if (sc_.power_mode == PowerMode::Average) return power::total_power(sc_.load);
    const auto& l = sc_.load;
    const double frac = (std::abs(truth_.v_l) + std::abs(truth_.v_r)) / (2.0 * sc_.mission.vehicle.v_max);
    int running = 0;
    if (!sampler_.estop)
      for (std::size_t i = 0; i < sampler_.motors.size(); ++i)
        if (sampler_.motors[i].action != sampler::Action::Stop && sampler_.expander_responsive[i]) ++running;
    return l.thrusters_W * std::min(1.0, frac) + l.computer_W + l.mcu_W + l.sensors_comms_W +
           running * l.sampler_motor_W;
  }

  telemetry::TelemetryMsg telemetry_message() const {
    telemetry::TelemetryMsg m;
    m.x = static_cast<float>(est_.mean(0));
    m.y = static_cast<float>(est_.mean(1));
    m.theta = static_cast<float>(est_.mean(2));
    m.V = static_cast<float>(power_.V);
    m.I = static_cast<float>(power_.I);
    m.soc = static_cast<float>(100.0 * power_.soc_Wh / sc_.power.E_use);
    m.t = static_cast<float>(t_);
    m.mission = {mode_code(exec_.mode()), status_code(exec_.status()),
                 static_cast<std::uint16_t>(std::max(0, exec_.current_waypoint()))};
    m.motor_status = sampler::status_bitmap(sampler::status_report(sampler_));
    return m;
  }

  void send_downlink(const telemetry::Message& m) {
    const std::uint16_t seq = downlink_seq_.next();
    const double d = station_distance();
    const auto o = downlink_.send(telemetry::encode_message(m, seq), seq, t_, d);
    nlohmann::json rec{{"link", "downlink"}, {"seq", seq}, {"distance", d},
                       {"msg_type", telemetry::type_name(telemetry::message_type(m))}};
    if (const auto* del = std::get_if<telemetry::Delivered>(&o)) {
      rec["outcome"] = "delivered";
      rec["latency"] = del->latency;
    } else {
      rec["outcome"] = "dropped";
    }
    log_.append("tx", t_, std::move(rec));
  }

  void apply_uplink(const std::vector<std::uint8_t>& bytes) {
    const auto d = telemetry::decode_message(bytes);
    nlohmann::json rec{{"link", "uplink"}, {"seq", d.seq}, {"msg", telemetry::message_to_json(d.message)}};
    if (const auto* c = std::get_if<telemetry::CommandMsg>(&d.message)) {
      const bool manual = c->mode == telemetry::DriveMode::Manual;
      exec_.request_mode(manual ? mission::DriveRequest::Manual : mission::DriveRequest::Auto);
      if (manual) exec_.set_manual_command({c->v_x, c->w_z});
    } else if (const auto* e = std::get_if<telemetry::EStopMsg>(&d.message)) {
      exec_.request_estop(e->engage);
    } else if (const auto* mc = std::get_if<telemetry::MotorCommandMsg>(&d.message)) {
      try {
        const auto cmd = sampler::decode_motor_command(mc->bytes, sc_.sampler.n_modules, sc_.sampler.motors_per_module);
        rec["result"] = sampler::command_result_name(sampler::apply_command(sampler_, cmd));
      } catch (const Error& err) {
        rec["result"] = "rejected";
        rec["error"] = err.what();
      }
    }
    log_.append("rx", t_, std::move(rec));
    send_downlink(telemetry::AckMsg{d.seq});
  }

  void finish(const std::string& reason) {
    finished_ = true;
    end_reason_ = reason;
    success_ = sc_.goal == RunGoal::Mission ? reason == "mission_complete" : reason == "depleted";
    const double mission_end = t_;
    // frames already on the air still reach the station
    for (const auto& bytes : downlink_.receive(std::numeric_limits<double>::infinity())) {
      const auto d = telemetry::decode_message(bytes);
      log_.append("rx", t_, {{"link", "downlink"}, {"seq", d.seq}, {"msg", telemetry::message_to_json(d.message)}});
    }
    double t = t_;
    if (sc_.retrieval_delay > 0.0) {
      // the boat is recovered later; sealed syringes keep leaking meanwhile
      for (auto& m : sampler_.motors) m.action = sampler::Action::Stop;
      sampler::step_sampler(sampler_, sc_.retrieval_delay, sc_.faults, rng_sampler_);
      t += sc_.retrieval_delay;
      for (const auto& label : sampled_)
        for (const auto& s : sampler_.syringes)
          if (s.label == label) log_.append("retrieval", t, {{"label", label}, {"volume", s.volume}});
    }
    log_.append("end", t,
                {{"reason", reason},
                 {"success", success_},
                 {"mission_status", mission::status_name(exec_.status())},
                 {"mission_end_s", mission_end},
                 {"energy_used_Wh", energy_used_Wh_},
                 {"soc_Wh", power_.soc_Wh},
                 {"replans", exec_.replans()}});
  }

  Scenario sc_;
  RngFactory rngs_;
  world::LocalFrame frame_;
  mission::MissionExecutor exec_;
  sampler::SamplerState sampler_;
  power::PowerState power_;
  telemetry::LinkChannel downlink_;
  telemetry::LinkChannel uplink_;
  telemetry::SeqCounter downlink_seq_;
  telemetry::SeqCounter uplink_seq_;
  CounterRng rng_dist_, rng_gnss_, rng_imu_, rng_sampler_;

  vehicle::TrueState truth_, prev_truth_;
  localization::StateEstimate est_;
  std::vector<double> scan_;
  vehicle::RoiResult roi_;
  vehicle::VelocityCommand cmd_;
  std::vector<std::string> sampled_;
  double energy_used_Wh_ = 0.0;
  SimLog log_;

  int gnss_div_ = 50, lidar_div_ = 5, tel_div_ = 50, state_div_ = 10;
  std::uint64_t k_ = 0;
  double t_ = 0.0;
  bool finished_ = false;
  bool success_ = false;
  std::string end_reason_;
};

struct RunResult {
  std::string log_text;
  std::string hash;
  MetricsReport metrics;
};

inline RunResult run(const Scenario& sc) {
  Simulator sim(sc);
  sim.run();
  return {sim.log().text(), sim.log().hash(), sim.metrics()};
}

}  // namespace hydrosim::sim
