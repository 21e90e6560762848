#pragma once

#include "gpmpc/gp/dataset.hpp"
#include "gpmpc/harness/config.hpp"

#include <cstdint>

namespace gpmpc::harness {

/// Logged transitions of one subsystem in raw units plus the scaled dataset
/// the GP is trained on.
struct SubsystemData {
  Eigen::MatrixXd states;    // count + 1 rows
  Eigen::MatrixXd controls;  // count rows
  gp::Dataset<double> raw;
  gp::ScalingTransform<double> scaling;  // state columns then control columns
  gp::Dataset<double> scaled;            // targets are differences of scaled states

  gp::ScalingTransform<double> state_scaling() const { return scaling.segment(0, states.cols()); }
  gp::ScalingTransform<double> control_scaling() const { return scaling.segment(states.cols(), controls.cols()); }
};

struct CollectedData {
  Trajectory trajectory;
  SubsystemData translational;
  SubsystemData rotational;
};

/// Scales the logged trajectory with a transform fitted on the raw inputs.
SubsystemData make_subsystem_data(Eigen::MatrixXd states, Eigen::MatrixXd controls);

/// Rng streams derived from one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Flies the plant along the configured reference under the PD baseline with
/// exploration noise on all six controls. Throws CollectionAborted if the
/// plant blows up before `count` transitions.
CollectedData collect_data(const ExperimentConfig& cfg, int count, std::uint64_t seed);

}  // namespace gpmpc::harness
