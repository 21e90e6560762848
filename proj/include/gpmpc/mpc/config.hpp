#pragma once

#include "gpmpc/common.hpp"

namespace gpmpc::mpc {

template <typename Scalar>
struct MPCConfig {
  int horizon = 1;
  MatrixX<Scalar> Q;  // n x n, PSD
  MatrixX<Scalar> R;  // m x m, PD
  VectorX<Scalar> x_min, x_max;
  VectorX<Scalar> u_min, u_max;
  Scalar confidence = Scalar(0.95);
  bool tighten = true;     // chance-constraint tightening of the state rows
  bool warm_start = true;  // hand the previous QP solution to the next solve
  int qp_max_iterations = -1;

  Eigen::Index state_dim() const { return Q.rows(); }
  Eigen::Index control_dim() const { return R.rows(); }

  void validate() const {
    const Eigen::Index n = Q.rows(), m = R.rows();
    require(horizon >= 1, "MPCConfig: horizon must be at least 1");
    require(n >= 1 && Q.cols() == n, "MPCConfig: Q must be square");
    require(m >= 1 && R.cols() == m, "MPCConfig: R must be square");
    require(x_min.size() == n && x_max.size() == n, "MPCConfig: state bound size");
    require(u_min.size() == m && u_max.size() == m, "MPCConfig: input bound size");
    require((x_min.array() <= x_max.array()).all(), "MPCConfig: x_min > x_max");
    require((u_min.array() <= u_max.array()).all(), "MPCConfig: u_min > u_max");
    require(confidence > Scalar(0) && confidence < Scalar(1), "MPCConfig: confidence must be in (0, 1)");
    // Only the two-sigma rule is implemented.
    require(std::abs(confidence - Scalar(0.95)) < Scalar(1e-12), "MPCConfig: only confidence 0.95 is supported");
    require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * std::max(Scalar(1), Q.cwiseAbs().maxCoeff()),
            "MPCConfig: Q must be symmetric");
    require(Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>>(Q).eigenvalues().minCoeff() >= -Scalar(1e-12),
            "MPCConfig: Q must be positive semidefinite");
    const Eigen::LLT<MatrixX<Scalar>> r_llt(R);
    require(r_llt.info() == Eigen::Success, "MPCConfig: R must be positive definite");
  }
};

}  // namespace gpmpc::mpc
