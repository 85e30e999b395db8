#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"
#include "hydrosim/core/rng.hpp"
#include "hydrosim/vehicle/thrust.hpp"

namespace hydrosim::vehicle {

/// Low-frequency sinusoidal drift plus white velocity noise, world frame.
struct DisturbanceModel {
  double drift_amp = 0.0;       ///< m/s
  double drift_period = 60.0;   ///< s
  double drift_phase = 0.0;     ///< rad
  double drift_direction = 0.0;  ///< rad, direction the drift pushes
  double white_sigma = 0.0;     ///< m/s per axis
  double heading_white_sigma = 0.0;  ///< rad/s

  bool zero() const { return drift_amp == 0.0 && white_sigma == 0.0 && heading_white_sigma == 0.0; }

  void validate() const {
    if (!(drift_amp >= 0) || !(white_sigma >= 0) || !(heading_white_sigma >= 0))
      throw Error(Errc::ConfigInvalid, "disturbance: amplitudes must be >= 0");
    if (!(drift_period > 0)) throw Error(Errc::ConfigInvalid, "disturbance: drift_period must be > 0");
  }
};

struct TrueState {
  Pose2 pose;
  double v_l = 0.0;  ///< post-lag thruster speeds, m/s
  double v_r = 0.0;
  double t = 0.0;    ///< s
  double v = 0.0;    ///< body forward speed through the water, m/s
  double w = 0.0;    ///< body yaw rate, rad/s
};

struct DisturbanceSample {
  Vec2 velocity;       ///< m/s, world frame
  double yaw_rate = 0.0;  ///< rad/s
};

inline Vec2 drift_velocity(const DisturbanceModel& d, double t) {
  const double s = d.drift_amp * std::sin(2.0 * std::numbers::pi * t / d.drift_period + d.drift_phase);
  return {s * std::cos(d.drift_direction), s * std::sin(d.drift_direction)};
}

template <class Rng>
DisturbanceSample sample_disturbance(const DisturbanceModel& d, double t, Rng& rng) {
  DisturbanceSample out;
  out.velocity = drift_velocity(d, t);
  out.velocity.x += gaussian(rng, d.white_sigma);
  out.velocity.y += gaussian(rng, d.white_sigma);
  out.yaw_rate = gaussian(rng, d.heading_white_sigma);
  return out;
}

inline double lag_factor(double dt, double tau) { return tau <= 0.0 ? 1.0 : 1.0 - std::exp(-dt / tau); }

/// Thrusters relax toward their targets, then the hull moves as a unicycle
/// under the body velocities plus the disturbance.
template <class Rng>
TrueState step_dynamics(const TrueState& s, const ThrusterSpeeds& target, const DisturbanceModel& dist,
                        const VehicleParams& params, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw Error(Errc::NonFiniteInput, "step_dynamics: dt must be > 0");
  const double a = lag_factor(dt, params.thrust_lag);
  TrueState out = s;
  out.v_l = s.v_l + (target.left - s.v_l) * a;
  out.v_r = s.v_r + (target.right - s.v_r) * a;
  const VelocityCommand body = unmix(out.v_l, out.v_r, params.B);
  out.v = body.v_x;
  out.w = body.w_z;

  const DisturbanceSample d = dist.zero() ? DisturbanceSample{} : sample_disturbance(dist, s.t, rng);
  out.pose.x = s.pose.x + (body.v_x * std::cos(s.pose.theta) + d.velocity.x) * dt;
  out.pose.y = s.pose.y + (body.v_x * std::sin(s.pose.theta) + d.velocity.y) * dt;
  out.pose.theta = normalize_heading(s.pose.theta + (body.w_z + d.yaw_rate) * dt);
  out.t = s.t + dt;
  return out;
}

inline nlohmann::json disturbance_to_json(const DisturbanceModel& d) {
  return {{"drift_amp", d.drift_amp},
          {"drift_period", d.drift_period},
          {"drift_phase", d.drift_phase},
          {"drift_direction", d.drift_direction},
          {"white_sigma", d.white_sigma},
          {"heading_white_sigma", d.heading_white_sigma}};
}

inline DisturbanceModel disturbance_from_json(const nlohmann::json& j, DisturbanceModel d = {}) {
  try {
    d.drift_amp = j.value("drift_amp", d.drift_amp);
    d.drift_period = j.value("drift_period", d.drift_period);
    d.drift_phase = j.value("drift_phase", d.drift_phase);
    d.drift_direction = j.value("drift_direction", d.drift_direction);
    d.white_sigma = j.value("white_sigma", d.white_sigma);
    d.heading_white_sigma = j.value("heading_white_sigma", d.heading_white_sigma);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("disturbance: ") + e.what());
  }
  d.validate();
  return d;
}

}  // namespace hydrosim::vehicle
