#pragma once

#include "gpmpc/common.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace gpmpc::harness {

// hover: a fixed point, used for regulation checks
enum class TrajectoryKind { elliptical, lorenz, hover };

std::string to_string(TrajectoryKind k);
TrajectoryKind parse_trajectory_kind(const std::string& s);

// x = a cos(wt), y = b sin(wt), z = c + d t
struct EllipticalParams {
  double a = 3.0, b = 2.0, c = 5.0, d = 0.0;
  double omega = 0.1;
};

struct LorenzParams {
  double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  Eigen::Vector3d initial{-8.0, 8.0, 27.0};
  double time_scale = 0.02;  // Lorenz time units per second
  int substeps = 20;         // RK4 substeps per sample
  Eigen::Vector3d box_min{-3.0, -3.0, 3.0};
  Eigen::Vector3d box_max{3.0, 3.0, 9.0};
};

struct HoverParams {
  Eigen::Vector3d point{1.0, -1.0, 5.0};
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::elliptical;
  double rate = 1.0;  // Hz
  std::vector<double> t;
  Eigen::MatrixX3d position;  // one row per sample: x_d, y_d, z_d
  Eigen::MatrixX3d velocity;

  Eigen::Index size() const { return position.rows(); }
  /// Sample k, holding the last one past the end.
  Eigen::Vector3d position_at(Eigen::Index k) const { return position.row(std::min(k, size() - 1)).transpose(); }
  Eigen::Vector3d velocity_at(Eigen::Index k) const {
    return k >= size() ? Eigen::Vector3d::Zero() : Eigen::Vector3d(velocity.row(k).transpose());
  }
  /// Translational reference [x, xd, y, yd, z, zd] at sample k.
  Eigen::Matrix<double, 6, 1> state_reference(Eigen::Index k) const;
  /// Scale used for relative tracking error: min(a, b) for ellipses, half the
  /// smallest box side for Lorenz, the distance from the origin for hover.
  double characteristic_radius = 1.0;
};

Eigen::Vector3d lorenz_derivative(const Eigen::Vector3d& l, const LorenzParams& p);
Eigen::Vector3d lorenz_rk4(const Eigen::Vector3d& l, double h, int substeps, const LorenzParams& p);

/// round(duration * rate) + 1 samples at t_i = i / rate.
Trajectory generate_elliptical(double duration, double rate, const EllipticalParams& p);
/// RK4-integrated Lorenz path, mapped per axis from its own bounding box onto
/// [box_min, box_max].
Trajectory generate_lorenz(double duration, double rate, const LorenzParams& p);
Trajectory generate_hover(double duration, double rate, const HoverParams& p);

}  // namespace gpmpc::harness
