#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/rng.hpp"

namespace hydrosim::sampler {

enum class Action : std::uint8_t { Stop = 0, Forward = 1, Reverse = 2 };

constexpr const char* action_name(Action a) {
  switch (a) {
    case Action::Stop: return "stop";
    case Action::Forward: return "forward";
    case Action::Reverse: return "reverse";
  }
  return "?";
}

inline Action action_from_name(const std::string& s) {
  if (s == "stop") return Action::Stop;
  if (s == "forward") return Action::Forward;
  if (s == "reverse") return Action::Reverse;
  throw Error(Errc::OutOfRange, "unknown action " + s);
}

struct SamplerParams {
  int n_modules = 6;
  int motors_per_module = 4;
  int syringes_per_motor = 3;
  double capacity = 45.0;       ///< mL
  double nominal_cycle = 90.0;  ///< s
  double motor_torque = 0.45;   ///< N m
  std::vector<double> gear_stages{4.0, 3.0};
  double max_travel_time = 240.0;  ///< s before a missing home switch times out
  double reporting_baseline = 130.0;  ///< s, reference for time-error figures

  double gear_ratio() const {
    double r = 1.0;
    for (double s : gear_stages) r *= s;
    return r;
  }
  double q_nominal() const { return capacity / nominal_cycle; }
  int n_motors() const { return n_modules * motors_per_module; }
  int n_syringes() const { return n_motors() * syringes_per_motor; }

  void validate() const {
    if (n_modules < 1 || n_modules > 26 || motors_per_module < 1 || syringes_per_motor < 1)
      throw Error(Errc::ConfigInvalid, "sampler: layout");
    if (!(capacity > 0) || !(nominal_cycle > 0)) throw Error(Errc::ConfigInvalid, "sampler: capacity and cycle > 0");
    for (double s : gear_stages)
      if (!(s > 0)) throw Error(Errc::ConfigInvalid, "sampler: gear stages > 0");
    if (!(max_travel_time > 0)) throw Error(Errc::ConfigInvalid, "sampler: max_travel_time > 0");
  }
};

inline double output_torque(const SamplerParams& p) { return p.gear_ratio() * p.motor_torque; }

struct FaultModel {
  double leak_prob = 0.0;         ///< per syringe, drawn when it seals
  double leak_rate = 0.0;         ///< mL/s once sealed
  double switch_fail_prob = 0.0;  ///< per cycle
  double drag_mu = 0.0;           ///< lognormal log-mean of the cycle-time multiplier
  double drag_sigma = 0.0;        ///< lognormal log-sd; 0 gives exp(mu)
  double expander_fail_prob = 0.0;  ///< per minute per expander

  static FaultModel none() { return {}; }

  /// Fitted to the field sampling statistics: mean fill time 150.88 s
  /// (drag with log-sd of the per-group times) and mean volume 35.25 mL
  /// after a 1300 s retrieval delay.
  static FaultModel calibrated() {
    FaultModel f;
    f.leak_prob = 0.75;
    f.leak_rate = 0.01;
    f.drag_sigma = 0.0796;
    f.drag_mu = std::log(150.88 / 90.0) - 0.5 * f.drag_sigma * f.drag_sigma;
    return f;
  }

  void validate() const {
    for (double p : {leak_prob, switch_fail_prob, expander_fail_prob})
      if (!(p >= 0 && p <= 1)) throw Error(Errc::ConfigInvalid, "faults: probabilities in [0, 1]");
    if (!(leak_rate >= 0) || !(drag_sigma >= 0) || !std::isfinite(drag_mu))
      throw Error(Errc::ConfigInvalid, "faults: rates");
  }
};

/// Retrieval delay used by the calibration harness, s.
inline constexpr double kCalibrationRetrievalDelay = 1300.0;

enum class Phase : std::uint8_t { Idle, Filling, Returning, Done, Fault };

struct MotorState {
  Action action = Action::Stop;
  double travel = 0.0;
  bool home_switch = true;
  double elapsed_in_cycle = 0.0;
  Phase phase = Phase::Idle;
  double drag = 1.0;
  bool faults_drawn = false;
  bool switch_failed = false;
};

struct SyringeState {
  double volume = 0.0;
  bool sealed = false;
  bool leaking = false;
  std::string label;
  double t_start = -1.0;
  double t_end = -1.0;
};

struct MotorCommand {
  std::uint8_t module = 0;
  std::uint8_t motor = 0;
  Action action = Action::Stop;

  friend bool operator==(const MotorCommand&, const MotorCommand&) = default;
};

inline std::array<std::uint8_t, 3> encode_motor_command(const MotorCommand& c) {
  return {c.module, c.motor, static_cast<std::uint8_t>(c.action)};
}

inline MotorCommand decode_motor_command(std::span<const std::uint8_t> bytes, int n_modules = 6,
                                         int motors_per_module = 4) {
  if (bytes.size() != 3) throw Error(Errc::BadLength, "motor command is 3 bytes");
  if (bytes[0] >= n_modules || bytes[1] >= motors_per_module || bytes[2] > 2)
    throw Error(Errc::OutOfRange, "motor command field out of range");
  return {bytes[0], bytes[1], static_cast<Action>(bytes[2])};
}

enum class EventKind {
  CycleStarted,
  CycleComplete,
  SwitchTimeout,
  Leak,
  ExpanderFailed,
  ExpanderRecovered,
  Dropped,
  EStopEngaged,
  EStopReleased,
};

constexpr const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::CycleStarted: return "CycleStarted";
    case EventKind::CycleComplete: return "CycleComplete";
    case EventKind::SwitchTimeout: return "SwitchTimeout";
    case EventKind::Leak: return "Leak";
    case EventKind::ExpanderFailed: return "ExpanderFailed";
    case EventKind::ExpanderRecovered: return "ExpanderRecovered";
    case EventKind::Dropped: return "Dropped";
    case EventKind::EStopEngaged: return "EStopEngaged";
    case EventKind::EStopReleased: return "EStopReleased";
  }
  return "?";
}

struct SamplerEvent {
  EventKind kind;
  int module = -1;
  int motor = -1;
  double t = 0.0;
};

enum class CommandResult { Accepted, EStopLatched, ExpanderUnresponsive };

constexpr const char* command_result_name(CommandResult r) {
  switch (r) {
    case CommandResult::Accepted: return "Accepted";
    case CommandResult::EStopLatched: return "EStopLatched";
    case CommandResult::ExpanderUnresponsive: return "ExpanderUnresponsive";
  }
  return "?";
}

inline std::string syringe_label(int module, int motor, int syringe) {
  return std::string(1, static_cast<char>('A' + module)) + std::to_string(motor + 1) + "_S" +
         std::to_string(syringe + 1);
}

/// Motor group label such as "B2".
inline std::string motor_label(int module, int motor) {
  return std::string(1, static_cast<char>('A' + module)) + std::to_string(motor + 1);
}

/// Parses "B2" into (module, motor), zero based.
inline std::pair<int, int> parse_motor_label(const std::string& s, const SamplerParams& p = {}) {
  if (s.size() < 2 || s[0] < 'A' || s[0] >= 'A' + p.n_modules) throw Error(Errc::OutOfRange, "motor label " + s);
  int motor = 0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k] < '0' || s[k] > '9') throw Error(Errc::OutOfRange, "motor label " + s);
    motor = motor * 10 + (s[k] - '0');
  }
  if (motor < 1 || motor > p.motors_per_module) throw Error(Errc::OutOfRange, "motor label " + s);
  return {s[0] - 'A', motor - 1};
}

struct SamplerState {
  SamplerParams params;
  std::vector<MotorState> motors;
  std::vector<SyringeState> syringes;
  /// One expander per motor line, four per module controller.
  std::vector<bool> expander_responsive;
  std::vector<MotorCommand> pending;
  bool estop = false;
  double t = 0.0;

  explicit SamplerState(SamplerParams p = {}) : params(std::move(p)) {
    params.validate();
    motors.assign(static_cast<std::size_t>(params.n_motors()), {});
    expander_responsive.assign(static_cast<std::size_t>(params.n_motors()), true);
    for (int m = 0; m < params.n_modules; ++m)
      for (int k = 0; k < params.motors_per_module; ++k)
        for (int s = 0; s < params.syringes_per_motor; ++s) syringes.push_back({0.0, false, false, syringe_label(m, k, s)});
  }

  std::size_t motor_index(int module, int motor) const {
    return static_cast<std::size_t>(module * params.motors_per_module + motor);
  }
  MotorState& motor(int module, int motor) { return motors[motor_index(module, motor)]; }
  const MotorState& motor(int module, int motor) const { return motors[motor_index(module, motor)]; }
  SyringeState& syringe(int module, int motor, int s) {
    return syringes[motor_index(module, motor) * static_cast<std::size_t>(params.syringes_per_motor) +
                    static_cast<std::size_t>(s)];
  }
  const SyringeState& syringe(int module, int motor, int s) const {
    return syringes[motor_index(module, motor) * static_cast<std::size_t>(params.syringes_per_motor) +
                    static_cast<std::size_t>(s)];
  }
};

inline CommandResult apply_command(SamplerState& st, const MotorCommand& c) {
  if (c.module >= st.params.n_modules || c.motor >= st.params.motors_per_module)
    throw Error(Errc::OutOfRange, "motor command indices");
  if (st.estop) return CommandResult::EStopLatched;
  const std::size_t idx = st.motor_index(c.module, c.motor);
  if (!st.expander_responsive[idx]) {
    st.pending.push_back(c);
    return CommandResult::ExpanderUnresponsive;
  }
  MotorState& m = st.motors[idx];
  if (c.action == Action::Forward && m.home_switch && (m.phase == Phase::Idle || m.phase == Phase::Done)) {
    m.phase = Phase::Filling;
    m.elapsed_in_cycle = 0.0;
    m.faults_drawn = false;
    m.switch_failed = false;
    m.drag = 1.0;
  }
  m.action = c.action;
  return CommandResult::Accepted;
}

inline std::vector<SamplerEvent> emergency_stop(SamplerState& st, bool engage) {
  std::vector<SamplerEvent> ev;
  if (engage) {
    for (auto& m : st.motors) m.action = Action::Stop;
    if (!st.estop) ev.push_back({EventKind::EStopEngaged, -1, -1, st.t});
    st.estop = true;
  } else {
    if (st.estop) ev.push_back({EventKind::EStopReleased, -1, -1, st.t});
    st.estop = false;
  }
  return ev;
}

/// Reinitializes unresponsive expanders. Commands queued against them are
/// reported as dropped; paused motors resume from their recorded travel.
inline std::vector<SamplerEvent> bus_recovery(SamplerState& st) {
  std::vector<SamplerEvent> ev;
  for (const auto& c : st.pending) ev.push_back({EventKind::Dropped, c.module, c.motor, st.t});
  st.pending.clear();
  for (std::size_t i = 0; i < st.expander_responsive.size(); ++i) {
    if (st.expander_responsive[i]) continue;
    st.expander_responsive[i] = true;
    const int module = static_cast<int>(i) / st.params.motors_per_module;
    ev.push_back({EventKind::ExpanderRecovered, module, static_cast<int>(i) % st.params.motors_per_module, st.t});
  }
  return ev;
}

/// Marks one expander unresponsive (fault injection).
inline SamplerEvent fail_expander(SamplerState& st, int module, int motor) {
  st.expander_responsive[st.motor_index(module, motor)] = false;
  return {EventKind::ExpanderFailed, module, motor, st.t};
}

namespace detail {

template <class Rng>
double draw_drag(const FaultModel& f, Rng& rng) {
  if (f.drag_sigma <= 0.0) return std::exp(f.drag_mu);
  return std::lognormal_distribution<double>(f.drag_mu, f.drag_sigma)(rng);
}

}  // namespace detail

/// Advances every motor by dt. Travel runs 0 -> 1 while the motor's three
/// syringes aspirate; at full travel they seal and the plunger returns home.
template <class Rng>
std::vector<SamplerEvent> step_sampler(SamplerState& st, double dt, const FaultModel& faults, Rng& rng) {
  if (!(dt > 0.0)) throw Error(Errc::NonFiniteInput, "step_sampler: dt must be > 0");
  std::vector<SamplerEvent> ev;
  const double t_end = st.t + dt;
  if (st.estop) {
    st.t = t_end;
    return ev;
  }
  const auto& p = st.params;

  if (faults.expander_fail_prob > 0.0) {
    const double per_step = 1.0 - std::pow(1.0 - faults.expander_fail_prob, dt / 60.0);
    for (std::size_t i = 0; i < st.expander_responsive.size(); ++i) {
      if (!st.expander_responsive[i] || !(uniform01(rng) < per_step)) continue;
      ev.push_back(fail_expander(st, static_cast<int>(i) / p.motors_per_module, static_cast<int>(i) % p.motors_per_module));
    }
  }

  for (int mod = 0; mod < p.n_modules; ++mod) {
    for (int k = 0; k < p.motors_per_module; ++k) {
      MotorState& m = st.motor(mod, k);
      const std::size_t idx = st.motor_index(mod, k);
      const auto syringe = [&](int s) -> SyringeState& { return st.syringe(mod, k, s); };

      // sealed syringes leak regardless of what the motor is doing
      for (int s = 0; s < p.syringes_per_motor; ++s) {
        SyringeState& sy = syringe(s);
        if (sy.sealed && sy.leaking) sy.volume = std::max(0.0, sy.volume - faults.leak_rate * dt);
      }
      if (!st.expander_responsive[idx] || m.action == Action::Stop) continue;

      if (m.action == Action::Reverse) {
        m.travel = std::max(0.0, m.travel - dt / (p.nominal_cycle * m.drag));
        for (int s = 0; s < p.syringes_per_motor; ++s)
          if (!syringe(s).sealed) syringe(s).volume = std::min(syringe(s).volume, p.capacity * m.travel);
        if (m.travel <= 0.0) {
          m.travel = 0.0;
          m.home_switch = true;
          m.action = Action::Stop;
          if (m.phase == Phase::Filling) m.phase = Phase::Idle;
        }
        continue;
      }

      // Forward
      if (m.phase == Phase::Idle || m.phase == Phase::Done || m.phase == Phase::Fault) {
        m.action = Action::Stop;
        continue;
      }
      if (!m.faults_drawn) {
        m.drag = detail::draw_drag(faults, rng);
        m.switch_failed = faults.switch_fail_prob > 0.0 && uniform01(rng) < faults.switch_fail_prob;
        m.faults_drawn = true;
        ev.push_back({EventKind::CycleStarted, mod, k, st.t});
        for (int s = 0; s < p.syringes_per_motor; ++s)
          if (!syringe(s).sealed) syringe(s).t_start = st.t;
      }
      m.elapsed_in_cycle += dt;
      m.home_switch = false;

      if (m.phase == Phase::Filling) {
        m.travel = std::min(1.0, m.travel + dt / (p.nominal_cycle * m.drag));
        const bool full = m.travel >= 1.0 - 1e-9;
        if (full) m.travel = 1.0;
        for (int s = 0; s < p.syringes_per_motor; ++s) {
          SyringeState& sy = syringe(s);
          if (sy.sealed) continue;
          sy.volume = full ? p.capacity : std::min(p.capacity, sy.volume + p.q_nominal() / m.drag * dt);
        }
        if (full) {
          for (int s = 0; s < p.syringes_per_motor; ++s) {
            SyringeState& sy = syringe(s);
            if (sy.sealed) continue;
            sy.sealed = true;
            sy.t_end = t_end;
            sy.leaking = faults.leak_prob > 0.0 && uniform01(rng) < faults.leak_prob;
            if (sy.leaking) ev.push_back({EventKind::Leak, mod, k, t_end});
          }
          m.phase = Phase::Returning;
        }
      }
      if (m.phase == Phase::Returning) {
        if (m.switch_failed) {
          if (m.elapsed_in_cycle >= p.max_travel_time - 1e-9) {
            m.action = Action::Stop;
            m.phase = Phase::Fault;
            ev.push_back({EventKind::SwitchTimeout, mod, k, t_end});
          }
        } else {
          m.travel = 0.0;
          m.home_switch = true;
          m.action = Action::Stop;
          m.phase = Phase::Done;
          ev.push_back({EventKind::CycleComplete, mod, k, t_end});
        }
      }
    }
  }
  st.t = t_end;
  return ev;
}

struct MotorStatus {
  int module = 0;
  int motor = 0;
  Action action = Action::Stop;
  bool home = true;
  double travel = 0.0;

  friend bool operator==(const MotorStatus&, const MotorStatus&) = default;
};

struct StatusReport {
  std::vector<MotorStatus> motors;
  bool estop = false;
};

inline StatusReport status_report(const SamplerState& st) {
  StatusReport r;
  r.estop = st.estop;
  for (int mod = 0; mod < st.params.n_modules; ++mod)
    for (int k = 0; k < st.params.motors_per_module; ++k) {
      const MotorState& m = st.motor(mod, k);
      r.motors.push_back({mod, k, m.action, m.home_switch, m.travel});
    }
  return r;
}

/// Three bits per motor, least significant first: action in bits 0-1,
/// home switch in bit 2.
inline std::array<std::uint8_t, 9> status_bitmap(const StatusReport& r) {
  std::array<std::uint8_t, 9> out{};
  for (std::size_t i = 0; i < r.motors.size() && i < 24; ++i) {
    const unsigned v = static_cast<unsigned>(r.motors[i].action) | (r.motors[i].home ? 4u : 0u);
    for (int b = 0; b < 3; ++b)
      if (v & (1u << b)) {
        const std::size_t bit = i * 3 + static_cast<std::size_t>(b);
        out[bit / 8] = static_cast<std::uint8_t>(out[bit / 8] | (1u << (bit % 8)));
      }
  }
  return out;
}

/// Inverse of status_bitmap; travel is not carried and reads 0.
inline std::vector<MotorStatus> motors_from_bitmap(const std::array<std::uint8_t, 9>& bits, int motors_per_module = 4) {
  std::vector<MotorStatus> out;
  for (std::size_t i = 0; i < 24; ++i) {
    unsigned v = 0;
    for (int b = 0; b < 3; ++b) {
      const std::size_t bit = i * 3 + static_cast<std::size_t>(b);
      if (bits[bit / 8] & (1u << (bit % 8))) v |= 1u << b;
    }
    const unsigned action = v & 3u;
    out.push_back({static_cast<int>(i) / motors_per_module, static_cast<int>(i) % motors_per_module,
                   static_cast<Action>(action > 2 ? 0 : action), (v & 4u) != 0, 0.0});
  }
  return out;
}

inline nlohmann::json status_to_json(const StatusReport& r) {
  nlohmann::json motors = nlohmann::json::array();
  for (const auto& m : r.motors)
    motors.push_back({{"module", m.module}, {"motor", m.motor}, {"action", action_name(m.action)}, {"home", m.home},
                      {"travel", m.travel}});
  return {{"estop", r.estop}, {"motors", motors}};
}

inline nlohmann::json fault_model_to_json(const FaultModel& f) {
  return {{"leak_prob", f.leak_prob},         {"leak_rate", f.leak_rate},   {"switch_fail_prob", f.switch_fail_prob},
          {"drag_mu", f.drag_mu},             {"drag_sigma", f.drag_sigma}, {"expander_fail_prob", f.expander_fail_prob}};
}

/// Accepts "calibrated" or "none" as shorthands.
inline FaultModel fault_model_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "calibrated") return FaultModel::calibrated();
    if (s == "none") return FaultModel::none();
    throw Error(Errc::ConfigInvalid, "faults: unknown preset " + s);
  }
  FaultModel f;
  try {
    if (j.value("preset", std::string{}) == "calibrated") f = FaultModel::calibrated();
    f.leak_prob = j.value("leak_prob", f.leak_prob);
    f.leak_rate = j.value("leak_rate", f.leak_rate);
    f.switch_fail_prob = j.value("switch_fail_prob", f.switch_fail_prob);
    f.drag_mu = j.value("drag_mu", f.drag_mu);
    f.drag_sigma = j.value("drag_sigma", f.drag_sigma);
    f.expander_fail_prob = j.value("expander_fail_prob", f.expander_fail_prob);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("faults: ") + e.what());
  }
  f.validate();
  return f;
}

inline nlohmann::json sampler_params_to_json(const SamplerParams& p) {
  return {{"capacity", p.capacity},
          {"nominal_cycle", p.nominal_cycle},
          {"motor_torque", p.motor_torque},
          {"gear_stages", p.gear_stages},
          {"max_travel_time", p.max_travel_time},
          {"reporting_baseline", p.reporting_baseline}};
}

inline SamplerParams sampler_params_from_json(const nlohmann::json& j, SamplerParams p = {}) {
  try {
    p.capacity = j.value("capacity", p.capacity);
    p.nominal_cycle = j.value("nominal_cycle", p.nominal_cycle);
    p.motor_torque = j.value("motor_torque", p.motor_torque);
    p.gear_stages = j.value("gear_stages", p.gear_stages);
    p.max_travel_time = j.value("max_travel_time", p.max_travel_time);
    p.reporting_baseline = j.value("reporting_baseline", p.reporting_baseline);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("sampler: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace hydrosim::sampler
