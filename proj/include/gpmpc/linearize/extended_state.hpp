#pragma once

#include "gpmpc/gp/gaussian_state.hpp"

namespace gpmpc::lin {

/// s = [mu, vec(sqrt(Sigma))], the tail stored column-major.
template <typename Scalar>
class ExtendedState {
 public:
  ExtendedState() = default;

  /// Wraps a raw vector of size n + n^2. No check that the tail is a valid
  /// root; perturbed states used for differentiation need not be.
  ExtendedState(VectorX<Scalar> vec, Eigen::Index n) : vec_(std::move(vec)), n_(n) {
    require(n >= 1 && vec_.size() == n + n * n, "ExtendedState: size must be n + n^2");
  }

  Eigen::Index state_dim() const { return n_; }
  Eigen::Index size() const { return vec_.size(); }
  const VectorX<Scalar>& vec() const { return vec_; }

  auto mean() const { return vec_.head(n_); }
  /// The tail reshaped to n x n.
  MatrixX<Scalar> root() const { return Eigen::Map<const MatrixX<Scalar>>(vec_.data() + n_, n_, n_); }

 private:
  VectorX<Scalar> vec_;
  Eigen::Index n_ = 0;
};

/// Symmetric principal square root of a PSD matrix.
template <typename Scalar>
MatrixX<Scalar> principal_sqrt(const MatrixX<Scalar>& cov) {
  MatrixX<Scalar> c = cov;
  if (!gp::make_psd(c)) throw InvalidCovariance("principal_sqrt: matrix is not positive semidefinite");
  if (c.isZero(0)) return MatrixX<Scalar>::Zero(c.rows(), c.cols());
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(c);
  const VectorX<Scalar> roots = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  MatrixX<Scalar> r = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
  symmetrize(r);
  return r;
}

template <typename Scalar>
ExtendedState<Scalar> extend(const gp::GaussianState<Scalar>& state) {
  const Eigen::Index n = state.dim();
  VectorX<Scalar> v(n + n * n);
  v.head(n) = state.mean();
  const MatrixX<Scalar> r = principal_sqrt(state.cov());
  v.tail(n * n) = Eigen::Map<const VectorX<Scalar>>(r.data(), n * n);
  return ExtendedState<Scalar>(std::move(v), n);
}

/// Sigma = S S^T. For a symmetric root this is S^2; for an arbitrary
/// (perturbed) tail it is still PSD, so the map is defined everywhere.
template <typename Scalar>
gp::GaussianState<Scalar> collapse(const ExtendedState<Scalar>& s) {
  const MatrixX<Scalar> root = s.root();
  MatrixX<Scalar> cov = root * root.transpose();
  return gp::GaussianState<Scalar>(VectorX<Scalar>(s.mean()), std::move(cov));
}

}  // namespace gpmpc::lin
