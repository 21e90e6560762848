#pragma once

#include "gpmpc/common.hpp"

#include <Eigen/Core>

#include <random>

namespace gpmpc::sim {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Vector3 = Eigen::Vector3d;

struct QuadrotorParams {
  double mass = 0.65;
  double arm_length = 0.23;
  Vector3 inertia{7.5e-3, 7.5e-3, 1.3e-2};
  double gravity = 9.81;
  double translational_noise = 1e-2;  // std added to the velocities after each step
  double rotational_noise = 1e-2;     // std added to the angular rates
  int substeps = 10;

  void validate() const;
};

/// Translational block [x, xd, y, yd, z, zd] followed by the rotational block
/// [phi, phid, theta, thetad, psi, psid].
struct QuadrotorState {
  Vector6 translational = Vector6::Zero();
  Vector6 rotational = Vector6::Zero();

  Vector3 position() const { return {translational(0), translational(2), translational(4)}; }
  Vector3 velocity() const { return {translational(1), translational(3), translational(5)}; }
  Vector3 angles() const { return {rotational(0), rotational(2), rotational(4)}; }
  bool finite() const { return translational.allFinite() && rotational.allFinite(); }
};

struct ControlInputs {
  double U1 = 0, U2 = 0, U3 = 0, U4 = 0;
  double ux = 0, uy = 0;

  Vector3 translational() const { return {U1, ux, uy}; }
  Vector3 rotational() const { return {U2, U3, U4}; }
};

/// xdd = U1/m ux, ydd = U1/m uy, zdd = U1/m sqrt(1 - ux^2 - uy^2) - g. The
/// square root stands in for cos(phi) cos(theta); it is clamped at zero when
/// ux^2 + uy^2 > 1.
Vector6 translational_derivative(const Vector6& x, const Vector3& u, const QuadrotorParams& p);

/// Euler's rigid-body equations with gyroscopic coupling; the attitude rates
/// are taken as the body rates.
Vector6 rotational_derivative(const Vector6& x, const Vector3& u, const QuadrotorParams& p);

struct Intermediate {
  double ux, uy;
};
Intermediate intermediate_controls(double phi, double theta, double psi);

struct Attitude {
  double phi, theta;
};
/// Inverse of intermediate_controls for psi_d = 0. Throws UnreachableAttitude
/// outside |uy| < 1, |ux / cos(phi_d)| <= 1.
Attitude attitude_from_intermediate(double ux, double uy, double psi_d = 0.0);

double wrap_angle(double a);

/// RK4 over dt with p.substeps equal substeps, controls held, then Gaussian
/// disturbances on the velocities and rates. Angles are wrapped to (-pi, pi].
QuadrotorState simulate_step(const QuadrotorState& s, const ControlInputs& u, double dt, const QuadrotorParams& p,
                             std::mt19937_64& rng);

/// Noise-free RK4 with an explicit substep count, for convergence checks.
QuadrotorState integrate(const QuadrotorState& s, const ControlInputs& u, double dt, int substeps,
                         const QuadrotorParams& p);

}  // namespace gpmpc::sim
