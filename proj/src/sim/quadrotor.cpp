#include "gpmpc/sim/quadrotor.hpp"

#include <cmath>
#include <numbers>

namespace gpmpc::sim {

void QuadrotorParams::validate() const {
  require(mass > 0 && arm_length > 0 && gravity > 0, "QuadrotorParams: mass, arm length and gravity must be positive");
  require((inertia.array() > 0).all(), "QuadrotorParams: inertia must be positive");
  require(translational_noise >= 0 && rotational_noise >= 0, "QuadrotorParams: noise std must be nonnegative");
  require(substeps >= 1, "QuadrotorParams: substeps must be at least 1");
}

Vector6 translational_derivative(const Vector6& x, const Vector3& u, const QuadrotorParams& p) {
  const double a = u(0) / p.mass;
  const double vertical = std::sqrt(std::max(0.0, 1.0 - u(1) * u(1) - u(2) * u(2)));
  Vector6 d;
  d << x(1), a * u(1), x(3), a * u(2), x(5), a * vertical - p.gravity;
  return d;
}

Vector6 rotational_derivative(const Vector6& x, const Vector3& u, const QuadrotorParams& p) {
  const double ix = p.inertia(0), iy = p.inertia(1), iz = p.inertia(2);
  const double dphi = x(1), dtheta = x(3), dpsi = x(5);
  Vector6 d;
  d << dphi, (dtheta * dpsi * (iy - iz) + p.arm_length * u(0)) / ix,  //
      dtheta, (dphi * dpsi * (iz - ix) + p.arm_length * u(1)) / iy,   //
      dpsi, (dphi * dtheta * (ix - iy) + u(2)) / iz;
  return d;
}

Intermediate intermediate_controls(double phi, double theta, double psi) {
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double stheta = std::sin(theta);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);
  return {cphi * stheta * cpsi + sphi * spsi, cphi * stheta * spsi - sphi * cpsi};
}

Attitude attitude_from_intermediate(double ux, double uy, double psi_d) {
  if (psi_d != 0.0) throw ContractViolation("attitude_from_intermediate: only psi_d = 0 is supported");
  if (!std::isfinite(ux) || !std::isfinite(uy) || !(std::abs(uy) < 1.0))
    throw UnreachableAttitude("attitude_from_intermediate: |uy| must be below 1");
  const double phi = -std::asin(uy);
  const double ratio = ux / std::cos(phi);
  if (!(std::abs(ratio) <= 1.0)) throw UnreachableAttitude("attitude_from_intermediate: |ux / cos(phi)| exceeds 1");
  return {phi, std::asin(ratio)};
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  double w = std::fmod(a + pi, 2 * pi);
  if (w < 0) w += 2 * pi;
  w -= pi;
  return w == -pi ? pi : w;
}

namespace {

template <typename F>
Vector6 rk4(const F& f, const Vector6& x, double h) {
  const Vector6 k1 = f(x);
  const Vector6 k2 = f(x + 0.5 * h * k1);
  const Vector6 k3 = f(x + 0.5 * h * k2);
  const Vector6 k4 = f(x + h * k3);
  return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

QuadrotorState integrate(const QuadrotorState& s, const ControlInputs& u, double dt, int substeps,
                         const QuadrotorParams& p) {
  require(dt > 0 && substeps >= 1, "integrate: dt and substeps must be positive");
  const Vector3 ut = u.translational(), ur = u.rotational();
  auto ft = [&](const Vector6& x) { return translational_derivative(x, ut, p); };
  auto fr = [&](const Vector6& x) { return rotational_derivative(x, ur, p); };
  QuadrotorState out = s;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    out.translational = rk4(ft, out.translational, h);
    out.rotational = rk4(fr, out.rotational, h);
  }
  for (int i : {0, 2, 4}) out.rotational(i) = wrap_angle(out.rotational(i));
  return out;
}

QuadrotorState simulate_step(const QuadrotorState& s, const ControlInputs& u, double dt, const QuadrotorParams& p,
                             std::mt19937_64& rng) {
  p.validate();
  QuadrotorState out = integrate(s, u, dt, p.substeps, p);
  std::normal_distribution<double> noise(0.0, 1.0);
  if (p.translational_noise > 0)
    for (int i : {1, 3, 5}) out.translational(i) += p.translational_noise * noise(rng);
  if (p.rotational_noise > 0)
    for (int i : {1, 3, 5}) out.rotational(i) += p.rotational_noise * noise(rng);
  if (!out.finite()) throw SimulationBlowup("simulate_step: non-finite state");
  return out;
}

}  // namespace gpmpc::sim
