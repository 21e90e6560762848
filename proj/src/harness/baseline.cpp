#include "gpmpc/harness/baseline.hpp"

#include <cmath>

namespace gpmpc::harness {

Eigen::Vector3d translational_baseline(const Vector6& x, const Vector6& ref, const Eigen::Vector3d& accel_ff,
                                       const sim::QuadrotorParams& p, const BaselineSettings& gains, double dt) {
  const double kp = gains.kp_translational / (dt * dt), kd = gains.kd_translational / dt;
  Eigen::Vector3d a;
  for (int i = 0; i < 3; ++i) a(i) = accel_ff(i) + kp * (ref(2 * i) - x(2 * i)) + kd * (ref(2 * i + 1) - x(2 * i + 1));
  const Eigen::Vector3d thrust = p.mass * (a + Eigen::Vector3d(0, 0, p.gravity));
  const double u1 = thrust.norm();
  if (u1 == 0.0) return Eigen::Vector3d::Zero();
  return {u1, thrust(0) / u1, thrust(1) / u1};
}

Eigen::Vector3d rotational_baseline(const Vector6& eta, double phi_d, double theta_d, const sim::QuadrotorParams& p,
                                    const BaselineSettings& gains, double dt) {
  const double kp = gains.kp_rotational / (dt * dt), kd = gains.kd_rotational / dt;
  const double target[3] = {phi_d, theta_d, 0.0};
  Eigen::Vector3d alpha;
  for (int i = 0; i < 3; ++i) alpha(i) = kp * sim::wrap_angle(target[i] - eta(2 * i)) - kd * eta(2 * i + 1);
  return {p.inertia(0) * alpha(0) / p.arm_length, p.inertia(1) * alpha(1) / p.arm_length, p.inertia(2) * alpha(2)};
}

sim::Attitude attitude_targets(double ux, double uy) {
  constexpr double kMaxTilt = 0.99;
  const double r = std::hypot(ux, uy);
  if (r > kMaxTilt) {
    ux *= kMaxTilt / r;
    uy *= kMaxTilt / r;
  }
  return sim::attitude_from_intermediate(ux, uy, 0.0);
}

Eigen::Vector3d clamp(const Eigen::Vector3d& v, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace gpmpc::harness
