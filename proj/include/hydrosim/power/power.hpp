#pragma once

#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"

namespace hydrosim::power {

/// Average draw per subsystem, W.
struct LoadProfile {
  double thrusters_W = 1800.0;
  double computer_W = 25.0;
  double mcu_W = 3.3;
  double sensors_comms_W = 4.65;
  double sampler_motor_W = 20.4;  ///< per motor while running
  double sampler_duty = 0.10;
  int sampler_motors = 24;

  void validate() const {
    for (double v : {thrusters_W, computer_W, mcu_W, sensors_comms_W, sampler_motor_W})
      if (!(v >= 0)) throw Error(Errc::ConfigInvalid, "load profile: powers must be >= 0");
    if (!(sampler_duty >= 0 && sampler_duty <= 1)) throw Error(Errc::ConfigInvalid, "load profile: duty in [0, 1]");
    if (sampler_motors < 0) throw Error(Errc::ConfigInvalid, "load profile: sampler_motors >= 0");
  }
};

struct PowerParams {
  double E_use = 1920.0;  ///< usable energy, Wh
  double V_full = 26.8;
  double V_empty = 24.0;
  double solar_peak_W = 100.0;

  void validate() const {
    if (!(E_use > 0)) throw Error(Errc::ConfigInvalid, "power: E_use must be > 0");
    if (!(V_full > V_empty)) throw Error(Errc::ConfigInvalid, "power: V_full must exceed V_empty");
    if (!(solar_peak_W >= 0)) throw Error(Errc::ConfigInvalid, "power: solar_peak_W must be >= 0");
  }
};

struct PowerState {
  double soc_Wh = 1920.0;
  double V = 26.8;
  double I = 0.0;
  bool depleted = false;
};

inline double total_power(const LoadProfile& p) {
  return p.thrusters_W + p.computer_W + p.mcu_W + p.sensors_comms_W +
         p.sampler_motors * p.sampler_motor_W * p.sampler_duty;
}

/// Hours of operation from usable energy at a constant draw.
inline double endurance(double E_use, double P) {
  if (!(P > 0)) throw Error(Errc::NonPositivePower, "endurance needs P > 0");
  return E_use / P;
}

inline double voltage_at(double soc_Wh, const PowerParams& p) {
  const double f = std::clamp(soc_Wh / p.E_use, 0.0, 1.0);
  return p.V_empty + (p.V_full - p.V_empty) * f;
}

inline PowerState full_state(const PowerParams& p) { return {p.E_use, p.V_full, 0.0, false}; }

struct PowerStep {
  PowerState state;
  bool depleted_now = false;  ///< SoC reached zero on this step
};

/// Integrates the net draw over dt; SoC stays within [0, E_use].
inline PowerStep step_power(const PowerState& s, double load_W, double solar_W, double dt, const PowerParams& p) {
  if (!(dt > 0)) throw Error(Errc::NonFiniteInput, "step_power: dt must be > 0");
  const double net = load_W - solar_W;
  PowerStep out;
  out.state = s;
  out.state.soc_Wh = std::clamp(s.soc_Wh - net * dt / 3600.0, 0.0, p.E_use);
  out.state.V = voltage_at(out.state.soc_Wh, p);
  out.state.I = net / out.state.V;
  if (out.state.soc_Wh <= 0.0 && !s.depleted) {
    out.state.depleted = true;
    out.depleted_now = true;
  }
  return out;
}

inline PowerStep step_power(const PowerState& s, const LoadProfile& load, double solar_W, double dt,
                            const PowerParams& p) {
  return step_power(s, total_power(load), solar_W, dt, p);
}

inline nlohmann::json load_profile_to_json(const LoadProfile& l) {
  return {{"thrusters_W", l.thrusters_W},         {"computer_W", l.computer_W},
          {"mcu_W", l.mcu_W},                     {"sensors_comms_W", l.sensors_comms_W},
          {"sampler_motor_W", l.sampler_motor_W}, {"sampler_duty", l.sampler_duty},
          {"sampler_motors", l.sampler_motors}};
}

inline LoadProfile load_profile_from_json(const nlohmann::json& j, LoadProfile l = {}) {
  try {
    l.thrusters_W = j.value("thrusters_W", l.thrusters_W);
    l.computer_W = j.value("computer_W", l.computer_W);
    l.mcu_W = j.value("mcu_W", l.mcu_W);
    l.sensors_comms_W = j.value("sensors_comms_W", l.sensors_comms_W);
    l.sampler_motor_W = j.value("sampler_motor_W", l.sampler_motor_W);
    l.sampler_duty = j.value("sampler_duty", l.sampler_duty);
    l.sampler_motors = j.value("sampler_motors", l.sampler_motors);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("load profile: ") + e.what());
  }
  l.validate();
  return l;
}

inline nlohmann::json power_params_to_json(const PowerParams& p) {
  return {{"E_use", p.E_use}, {"V_full", p.V_full}, {"V_empty", p.V_empty}, {"solar_peak_W", p.solar_peak_W}};
}

inline PowerParams power_params_from_json(const nlohmann::json& j, PowerParams p = {}) {
  try {
    p.E_use = j.value("E_use", p.E_use);
    p.V_full = j.value("V_full", p.V_full);
    p.V_empty = j.value("V_empty", p.V_empty);
    p.solar_peak_W = j.value("solar_peak_W", p.solar_peak_W);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("power: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace hydrosim::power
