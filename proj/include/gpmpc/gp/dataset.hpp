#pragma once

#include "gpmpc/common.hpp"
#include "gpmpc/gp/scaling.hpp"

#include <optional>

namespace gpmpc::gp {

/// Transition data for a learned discrete model x_{k+1} = x_k + f(x_k, u_k).
///
/// Rows of `inputs` are state-control tuples [x, u]; rows of `targets` are
/// the state differences x_{k+1} - x_k.
template <typename Scalar>
struct Dataset {
  MatrixX<Scalar> inputs;
  MatrixX<Scalar> targets;
  // Scaling that produced `inputs` (state columns then control columns), if any.
  std::optional<ScalingTransform<Scalar>> scaling;

  Dataset() = default;
  Dataset(MatrixX<Scalar> in, MatrixX<Scalar> out, std::optional<ScalingTransform<Scalar>> s = std::nullopt)
      : inputs(std::move(in)), targets(std::move(out)), scaling(std::move(s)) {
    validate();
  }

  /// Builds difference targets from a logged trajectory: `states` has one more
  /// row than `controls`.
  static Dataset from_trajectory(const MatrixX<Scalar>& states, const MatrixX<Scalar>& controls) {
    require(states.rows() == controls.rows() + 1, "trajectory needs one more state than controls");
    require(controls.rows() >= 1, "trajectory needs at least one transition");
    const Eigen::Index count = controls.rows();
    const Eigen::Index n = states.cols();
    MatrixX<Scalar> in(count, n + controls.cols());
    in.leftCols(n) = states.topRows(count);
    in.rightCols(controls.cols()) = controls;
    MatrixX<Scalar> out = states.bottomRows(count) - states.topRows(count);
    return Dataset(std::move(in), std::move(out));
  }

  void validate() const {
    require(inputs.rows() >= 1, "dataset must contain at least one row");
    require(inputs.rows() == targets.rows(), "inputs/targets row mismatch");
    require(inputs.cols() > targets.cols(), "inputs must contain state and control columns");
    if (scaling) require(scaling->size() == inputs.cols(), "scaling width must match input width");
  }

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index state_dim() const { return targets.cols(); }
  Eigen::Index control_dim() const { return inputs.cols() - targets.cols(); }
  Eigen::Index input_dim() const { return inputs.cols(); }

  Dataset prefix(Eigen::Index rows) const {
    require(rows >= 1 && rows <= size(), "prefix size out of range");
    return Dataset(inputs.topRows(rows), targets.topRows(rows), scaling);
  }
};

}  // namespace gpmpc::gp
