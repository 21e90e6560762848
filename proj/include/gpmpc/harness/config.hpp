#pragma once

#include "gpmpc/gp/train.hpp"
#include "gpmpc/harness/trajectory.hpp"
#include "gpmpc/sim/quadrotor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace gpmpc::harness {

using Vector6 = Eigen::Matrix<double, 6, 1>;

struct TrajectorySettings {
  TrajectoryKind kind = TrajectoryKind::elliptical;
  double duration = 189.0;  // seconds
  double rate = 1.0;        // Hz
  EllipticalParams ellipse;
  LorenzParams lorenz;
  HoverParams hover;

  Trajectory generate() const;
};

struct NoiseSettings {
  double translational = 1e-2;  // plant disturbance std on velocities
  double rotational = 1e-2;     // and on angular rates
  // exploration noise added by the data-collection baseline
  double explore_thrust = 0.3;
  double explore_tilt = 0.02;
  double explore_torque = 2e-3;
};

struct GPSettings {
  int observations = 189;
  std::vector<int> sizes{10, 50, 100, 189};
  bool random_subsets = false;
  int restarts = 5;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double noise_floor = 1e-4;  // relative to each output's target variance

  gp::TrainOptions train_options(std::uint64_t seed) const;
};

/// Raw-unit bounds and diagonal weights; the controller works in scaled space
/// and converts these with the fitted transforms (a weight w on a column with
/// gain g becomes w / g^2). A 4:1 position to velocity ratio makes the
/// one-step problem deadbeat on a double integrator.
struct MPCSettings {
  int horizon = 1;
  Vector6 q_translational = (Vector6() << 1, 0.25, 1, 0.25, 1, 0.25).finished();
  Eigen::Vector3d r_translational{1e-4, 1e-2, 1e-2};
  Vector6 q_rotational = (Vector6() << 1, 0.25, 1, 0.25, 1, 0.25).finished();
  Eigen::Vector3d r_rotational{1.0, 1.0, 1.0};
  bool start_at_hover = true;  // initial U1 = m g instead of 0
  Eigen::Vector3d u_translational_min{0.0, -0.2, -0.2};  // U1, ux, uy
  Eigen::Vector3d u_translational_max{100.0, 0.2, 0.2};
  Eigen::Vector3d u_rotational_min{-0.02, -0.02, -0.02};  // U2, U3, U4
  Eigen::Vector3d u_rotational_max{0.02, 0.02, 0.02};
  bool tighten = true;
  bool warm_start = true;
  int qp_max_iterations = -1;
  double failsafe_fraction = 0.1;  // run fails if more steps than this fall back to holding the control
};

/// Gains of the data-collection baseline, as accelerations per unit error.
struct BaselineSettings {
  double kp_translational = 0.5, kd_translational = 1.0;
  double kp_rotational = 0.5, kd_rotational = 1.0;
};

struct ExperimentConfig {
  std::string name = "default";
  sim::QuadrotorParams plant;
  TrajectorySettings trajectory;
  NoiseSettings noise;
  GPSettings gp;
  MPCSettings mpc;
  BaselineSettings baseline;

  double dt() const { return 1.0 / trajectory.rate; }
  /// Plant parameters with the configured disturbance levels.
  sim::QuadrotorParams plant_params() const;
  void validate() const;
};

/// Named presets: default, elliptical-paper, lorenz, lorenz-paper,
/// paper-noise.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Reads INI text with sections [plant], [mpc], [gp], [trajectory], [noise]
/// and an optional [baseline]. A `preset` key at top level selects the base
/// that the remaining keys override. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical INI text of every setting; parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& c);

}  // namespace gpmpc::harness
