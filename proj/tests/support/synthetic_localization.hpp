#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "hydrosim/localization/ekf.hpp"

namespace synthetic {

struct FusionRun {
  double rmse_fused = 0.0;
  double rmse_gnss_only = 0.0;  ///< latest fix held between epochs
  double rmse_dead_reckoning = 0.0;
  double rmse_fused_at_fix = 0.0;
  double rmse_gnss_at_fix = 0.0;
};

/// 200 s drive with 50 Hz IMU and 1 Hz GNSS (sigma 0.3 m). Truth follows
/// a smooth speed and yaw-rate profile integrated with fine sub-steps.
inline FusionRun run_fusion(std::uint64_t seed, double duration = 200.0) {
  using namespace hydrosim::localization;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);

  constexpr double dt = 0.02;
  constexpr double gnss_sigma = 0.3;
  constexpr double gyro_sigma = 0.01;
  constexpr double accel_sigma = 0.05;
  const int steps = static_cast<int>(std::lround(duration / dt));

  double x = 0, y = 0, th = 0.3, v = 0.5;
  const auto speed_rate = [](double t) { return 0.05 * std::cos(0.05 * t); };
  const auto yaw_rate = [](double t) { return 0.12 * std::sin(0.07 * t); };

  StateEstimate fused;
  fused.mean << x, y, th, v;
  fused.P = Vector4(0.25, 0.25, 0.01, 0.04).asDiagonal();
  StateEstimate dead = fused;
  ProcessNoise q;

  GnssFix fix;
  fix.R = Matrix2::Identity() * gnss_sigma * gnss_sigma;
  double gx = x, gy = y;

  double se_f = 0, se_g = 0, se_d = 0, se_ff = 0, se_gf = 0;
  int n_fix = 0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    // truth, 10 sub-steps per IMU period
    const double v0 = v;
    for (int s = 0; s < 10; ++s) {
      const double ts = t + s * dt / 10;
      x += v * std::cos(th) * dt / 10;
      y += v * std::sin(th) * dt / 10;
      th += yaw_rate(ts) * dt / 10;
      v += speed_rate(ts) * dt / 10;
    }
    ImuSample imu{yaw_rate(t + dt / 2) + gyro_sigma * n01(rng), (v - v0) / dt + accel_sigma * n01(rng), dt};
    fused = predict(fused, imu, q);
    dead = predict(dead, imu, q);

    const bool fix_epoch = (k + 1) % 50 == 0;
    if (fix_epoch) {
      gx = x + gnss_sigma * n01(rng);
      gy = y + gnss_sigma * n01(rng);
      fix.z << gx, gy;
      fused = update_gnss(fused, fix);
    }
    const auto sq = [&](double ex, double ey) { return (ex - x) * (ex - x) + (ey - y) * (ey - y); };
    se_f += sq(fused.mean(kX), fused.mean(kY));
    se_g += sq(gx, gy);
    se_d += sq(dead.mean(kX), dead.mean(kY));
    if (fix_epoch) {
      se_ff += sq(fused.mean(kX), fused.mean(kY));
      se_gf += sq(gx, gy);
      ++n_fix;
    }
  }
  return {std::sqrt(se_f / steps), std::sqrt(se_g / steps), std::sqrt(se_d / steps), std::sqrt(se_ff / n_fix),
          std::sqrt(se_gf / n_fix)};
}

}  // namespace synthetic
