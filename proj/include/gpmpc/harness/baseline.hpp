#pragma once

#include "gpmpc/harness/config.hpp"
#include "gpmpc/sim/quadrotor.hpp"

namespace gpmpc::harness {

/// PD on position with acceleration feed-forward and gravity compensation.
/// Returns (U1, ux, uy) from the thrust vector m (a + g e_z).
Eigen::Vector3d translational_baseline(const Vector6& x, const Vector6& ref, const Eigen::Vector3d& accel_ff,
                                       const sim::QuadrotorParams& p, const BaselineSettings& gains, double dt);

/// PD on (phi, theta, psi) towards (phi_d, theta_d, 0). Returns (U2, U3, U4).
Eigen::Vector3d rotational_baseline(const Vector6& eta, double phi_d, double theta_d, const sim::QuadrotorParams& p,
                                    const BaselineSettings& gains, double dt);

/// Shrinks (ux, uy) into the disk where the attitude inverse is defined.
/// Only used to derive the attitude targets; the commanded values are kept.
sim::Attitude attitude_targets(double ux, double uy);

Eigen::Vector3d clamp(const Eigen::Vector3d& v, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi);

}  // namespace gpmpc::harness
