#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"

namespace hydrosim::vehicle {

struct VehicleParams {
  double B = 0.8;        ///< thruster separation, m
  double v_max = 1.5;    ///< m/s
  double w_max = 1.0;    ///< rad/s
  double thrust_lag = 0.4;  ///< first-order time constant, s; <= 0 is instantaneous
  double pwm_neutral = 1500.0;
  double pwm_min = 1000.0;
  double pwm_max = 2000.0;

  void validate() const {
    if (!(B > 0)) throw Error(Errc::ConfigInvalid, "vehicle: B must be > 0");
    if (!(v_max > 0)) throw Error(Errc::ConfigInvalid, "vehicle: v_max must be > 0");
    if (!(w_max > 0)) throw Error(Errc::ConfigInvalid, "vehicle: w_max must be > 0");
    if (!(pwm_min < pwm_neutral && pwm_neutral < pwm_max)) throw Error(Errc::ConfigInvalid, "vehicle: pwm ordering");
  }
};

struct VelocityCommand {
  double v_x = 0.0;  ///< m/s
  double w_z = 0.0;  ///< rad/s

  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

struct ThrusterSpeeds {
  double left = 0.0;
  double right = 0.0;
};

inline ThrusterSpeeds mix(const VelocityCommand& c, double B) {
  return {c.v_x - c.w_z * B / 2.0, c.v_x + c.w_z * B / 2.0};
}

inline VelocityCommand unmix(double v_l, double v_r, double B) { return {(v_l + v_r) / 2.0, (v_r - v_l) / B}; }

/// Non-finite components become zero.
inline VelocityCommand clamp_command(const VelocityCommand& c, const VehicleParams& p) {
  const auto clamp = [](double v, double lim) { return std::isfinite(v) ? std::clamp(v, -lim, lim) : 0.0; };
  return {clamp(c.v_x, p.v_max), clamp(c.w_z, p.w_max)};
}

/// Thruster speed to ESC pulse width, affine on [-v_max, v_max].
inline double pwm_map(double v, const VehicleParams& p) {
  v = std::clamp(v, -p.v_max, p.v_max);
  if (v >= 0.0) return p.pwm_neutral + (p.pwm_max - p.pwm_neutral) * v / p.v_max;
  return p.pwm_neutral + (p.pwm_neutral - p.pwm_min) * v / p.v_max;
}

inline nlohmann::json vehicle_params_to_json(const VehicleParams& p) {
  return {{"B", p.B},
          {"v_max", p.v_max},
          {"w_max", p.w_max},
          {"thrust_lag", p.thrust_lag},
          {"pwm_neutral", p.pwm_neutral},
          {"pwm_min", p.pwm_min},
          {"pwm_max", p.pwm_max}};
}

inline VehicleParams vehicle_params_from_json(const nlohmann::json& j, VehicleParams p = {}) {
  try {
    p.B = j.value("B", p.B);
    p.v_max = j.value("v_max", p.v_max);
    p.w_max = j.value("w_max", p.w_max);
    p.thrust_lag = j.value("thrust_lag", p.thrust_lag);
    p.pwm_neutral = j.value("pwm_neutral", p.pwm_neutral);
    p.pwm_min = j.value("pwm_min", p.pwm_min);
    p.pwm_max = j.value("pwm_max", p.pwm_max);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("vehicle: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace hydrosim::vehicle
