#pragma once

#include "gpmpc/common.hpp"

#include <algorithm>

namespace gpmpc::gp {

/// Eigenvalues below this (relative to max(1, largest |eigenvalue|)) are errors;
/// anything between it and zero is clamped to zero.
inline constexpr double kPsdTolerance = 1e-10;

/// Symmetrizes `cov` in place and clamps small negative eigenvalues to zero.
/// Returns false when an eigenvalue is negative beyond the tolerance.
template <typename Scalar>
bool make_psd(MatrixX<Scalar>& cov) {
  symmetrize(cov);
  if (cov.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(cov);
  if (eig.info() != Eigen::Success) return false;
  const VectorX<Scalar>& values = eig.eigenvalues();
  const Scalar scale = std::max(Scalar(1), values.cwiseAbs().maxCoeff());
  if (values.minCoeff() >= Scalar(0)) return true;
  if (values.minCoeff() < -Scalar(kPsdTolerance) * scale) return false;
  const VectorX<Scalar> clamped = values.cwiseMax(Scalar(0));
  cov = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  symmetrize(cov);
  return true;
}

/// Gaussian belief N(mean, cov) over a subsystem state.
template <typename Scalar>
class GaussianState {
 public:
  GaussianState() = default;

  /// Deterministic state: zero covariance.
  explicit GaussianState(VectorX<Scalar> mean)
      : mean_(std::move(mean)), cov_(MatrixX<Scalar>::Zero(mean_.size(), mean_.size())) {}

  GaussianState(VectorX<Scalar> mean, MatrixX<Scalar> cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    require(cov_.rows() == mean_.size() && cov_.cols() == mean_.size(), "GaussianState: covariance shape");
    if (!mean_.allFinite() || !cov_.allFinite()) throw InvalidCovariance("GaussianState: non-finite entries");
    if (!make_psd(cov_)) throw InvalidCovariance("GaussianState: covariance is not positive semidefinite");
  }

  const VectorX<Scalar>& mean() const { return mean_; }
  const MatrixX<Scalar>& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

 private:
  VectorX<Scalar> mean_;
  MatrixX<Scalar> cov_;
};

/// Joint Gaussian over the state-control tuple.
template <typename Scalar>
struct UncertainInput {
  VectorX<Scalar> mean;
  MatrixX<Scalar> cov;

  /// State belief paired with a deterministic control: the control block of
  /// the covariance (and its cross terms) is exactly zero.
  static UncertainInput from_state(const GaussianState<Scalar>& state, const VectorX<Scalar>& control) {
    const Eigen::Index n = state.dim();
    const Eigen::Index m = control.size();
    UncertainInput in;
    in.mean.resize(n + m);
    in.mean << state.mean(), control;
    in.cov = MatrixX<Scalar>::Zero(n + m, n + m);
    in.cov.topLeftCorner(n, n) = state.cov();
    return in;
  }
};

}  // namespace gpmpc::gp
