#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "hydrosim/core/error.hpp"
#include "hydrosim/core/geometry.hpp"

namespace hydrosim::localization {

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;
using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

enum StateIndex : int { kX = 0, kY = 1, kTheta = 2, kV = 3 };

/// Mean [x, y, theta, v] and its covariance.
struct StateEstimate {
  Vector4 mean = Vector4::Zero();
  Matrix4 P = Matrix4::Identity();

  Pose2 pose() const { return {mean(kX), mean(kY), mean(kTheta)}; }
  double speed() const { return mean(kV); }
};

struct ImuSample {
  double yaw_rate = 0.0;       ///< rad/s
  double forward_accel = 0.0;  ///< m/s^2
  double dt = 0.0;             ///< s
};

struct GnssFix {
  Vector2 z = Vector2::Zero();           ///< local x, y in m
  Matrix2 R = Matrix2::Identity() * 0.09;  ///< m^2
};

/// Continuous-time process noise density; predict adds Q * dt.
struct ProcessNoise {
  Matrix4 Q = Vector4(1e-4, 1e-4, 1e-5, 1e-3).asDiagonal();
};

inline void symmetrize(Matrix4& P) { P = 0.5 * (P + P.transpose()).eval(); }

/// IMU time update. Forward Euler on the unicycle model, heading of the
/// step start drives the position increment.
inline StateEstimate predict(const StateEstimate& est, const ImuSample& u, const ProcessNoise& noise) {
  if (!std::isfinite(u.yaw_rate) || !std::isfinite(u.forward_accel) || !std::isfinite(u.dt) ||
      !est.mean.allFinite() || !est.P.allFinite())
    throw Error(Errc::NonFiniteInput, "predict");
  if (!(u.dt > 0.0)) throw Error(Errc::NonFiniteInput, "predict: dt must be > 0");

  const double th = est.mean(kTheta);
  const double v = est.mean(kV);
  const double c = std::cos(th);
  const double s = std::sin(th);
  const double dt = u.dt;

  StateEstimate out;
  out.mean(kX) = est.mean(kX) + v * c * dt;
  out.mean(kY) = est.mean(kY) + v * s * dt;
  out.mean(kTheta) = normalize_heading(th + u.yaw_rate * dt);
  out.mean(kV) = v + u.forward_accel * dt;

  Matrix4 F = Matrix4::Identity();
  F(kX, kTheta) = -v * s * dt;
  F(kX, kV) = c * dt;
  F(kY, kTheta) = v * c * dt;
  F(kY, kV) = s * dt;

  out.P = F * est.P * F.transpose() + noise.Q * dt;
  symmetrize(out.P);
  return out;
}

/// GNSS position correction. H selects (x, y); P+ = (I - K H) P-.
inline StateEstimate update_gnss(const StateEstimate& est, const GnssFix& fix) {
  if (!fix.z.allFinite() || !fix.R.allFinite() || !est.P.allFinite() || !est.mean.allFinite())
    throw Error(Errc::NonFiniteInput, "update_gnss");

  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, kX) = 1.0;
  H(1, kY) = 1.0;

  const Matrix2 S = H * est.P * H.transpose() + fix.R;
  const double det = S.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-300) throw Error(Errc::SingularInnovation, "innovation covariance");

  const Eigen::Matrix<double, 4, 2> K = est.P * H.transpose() * S.inverse();
  const Vector2 innovation = fix.z - H * est.mean;

  StateEstimate out;
  out.mean = est.mean + K * innovation;
  out.mean(kTheta) = normalize_heading(out.mean(kTheta));
  out.P = (Matrix4::Identity() - K * H) * est.P;
  symmetrize(out.P);
  return out;
}

/// Optional absolute heading correction (AHRS yaw), innovation wrapped.
inline StateEstimate update_heading(const StateEstimate& est, double heading, double variance) {
  if (!std::isfinite(heading) || !(variance > 0.0)) throw Error(Errc::NonFiniteInput, "update_heading");
  Eigen::Matrix<double, 1, 4> H = Eigen::Matrix<double, 1, 4>::Zero();
  H(0, kTheta) = 1.0;
  const double S = est.P(kTheta, kTheta) + variance;
  const Vector4 K = est.P * H.transpose() / S;
  StateEstimate out;
  out.mean = est.mean + K * heading_difference(heading, est.mean(kTheta));
  out.mean(kTheta) = normalize_heading(out.mean(kTheta));
  out.P = (Matrix4::Identity() - K * H) * est.P;
  symmetrize(out.P);
  return out;
}

}  // namespace hydrosim::localization
