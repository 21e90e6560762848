#pragma once

#include "gpmpc/gp/model.hpp"
#include "gpmpc/harness/collect.hpp"
#include "gpmpc/mpc/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gpmpc::harness {

/// A trained subsystem model with the transforms into its scaled space.
struct SubsystemModel {
  gp::TrainedGP<double> gp;
  gp::ScalingTransform<double> state_scaling;
  gp::ScalingTransform<double> control_scaling;
  bool training_warning = false;
};

struct Models {
  SubsystemModel translational;
  SubsystemModel rotational;
};

Models train_models(const CollectedData& data, const ExperimentConfig& cfg, std::uint64_t seed);

/// Scaled-space controller settings for one subsystem. Raw input bounds map
/// through the (increasing) control transform; states are unconstrained.
mpc::MPCConfig<double> scaled_mpc_config(const ExperimentConfig& cfg, const SubsystemModel& model,
                                         bool translational);

/// One closed-loop step: inputs applied over [t_k, t_k+1] and the resulting
/// state. Rotational quantities are in radians (the controller itself sees
/// them scaled).
struct StepRecord {
  int step = 0;
  double t = 0;                       // t_{k+1}
  Eigen::Vector3d position;           // after the step
  Eigen::Vector3d reference;          // r_{k+1}
  Eigen::Vector3d angles;             // phi, theta, psi after the step
  double phi_d = 0, theta_d = 0;      // attitude targets from the outer loop
  Eigen::Vector3d u_translational;    // U1, ux, uy
  Eigen::Vector3d u_rotational;       // U2, U3, U4
  int qp_iterations_translational = 0;
  int qp_iterations_rotational = 0;
  double cost_translational = 0;
  double cost_rotational = 0;
  bool failsafe_translational = false;
  bool failsafe_rotational = false;
  int rows_relaxed = 0;
};

struct TrackingMetrics {
  Eigen::Vector3d rmse_axis = Eigen::Vector3d::Zero();  // x, y, z, meters
  double rmse = 0;                                      // position error norm
  double final_quarter_rmse = 0;
  double characteristic_radius = 1;
  double relative_final_quarter = 0;  // final_quarter_rmse / characteristic_radius
  Eigen::Vector3d attitude_rmse_scaled = Eigen::Vector3d::Zero();  // phi, theta, psi in the rotational scaled space
  int violations_translational = 0;  // applied inputs outside the configured raw bounds
  int violations_rotational = 0;
  int failsafe_steps = 0;  // steps where either loop held its previous input
  double mean_qp_iterations_translational = 0;
  double mean_qp_iterations_rotational = 0;
  bool failed = false;  // failsafe fraction exceeded
  std::string first_failure;
};

struct TrackingResult {
  std::vector<StepRecord> steps;
  std::vector<double> wall_time;  // seconds per step, kept out of the CSVs
  TrackingMetrics metrics;
};

/// Hierarchical loop: translational GPMPC gives (U1, ux, uy), the attitude
/// targets follow with psi_d = 0, rotational GPMPC gives (U2, U3, U4); the
/// plant starts at rest at the origin with zero inputs.
TrackingResult run_closed_loop(const ExperimentConfig& cfg, const Models& models, const Trajectory& traj,
                               std::uint64_t seed);

TrackingMetrics compute_metrics(const std::vector<StepRecord>& steps, const ExperimentConfig& cfg,
                                const Models& models, double characteristic_radius);

}  // namespace gpmpc::harness
