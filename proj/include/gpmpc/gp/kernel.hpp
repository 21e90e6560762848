#pragma once

#include "gpmpc/common.hpp"
#include "gpmpc/gp/hyperparameters.hpp"

#include <cmath>
#include <numbers>

namespace gpmpc::gp {

/// Squared-exponential ARD covariance sf2 * exp(-1/2 (a-b)^T L^{-2} (a-b)).
/// Observation noise is not part of the kernel; it only enters the Gram diagonal.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar kernel_eval(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                   const Hyperparameters<Scalar>& h) {
  if (a.size() != h.input_dim() || b.size() != h.input_dim())
    throw ContractViolation("kernel_eval: dimension mismatch");
  const VectorX<Scalar> w = h.inverse_sq_lengthscales();
  const Scalar q = ((a.derived() - b.derived()).array().square() * w.array()).sum();
  return h.signal_variance() * std::exp(-q / 2);
}

/// Cross-covariance matrix with K(i, j) = k(left.row(i), right.row(j)).
template <typename Scalar>
MatrixX<Scalar> kernel_matrix(const MatrixX<Scalar>& left, const MatrixX<Scalar>& right,
                              const Hyperparameters<Scalar>& h) {
  require(left.cols() == h.input_dim() && right.cols() == h.input_dim(), "kernel_matrix: dimension mismatch");
  const VectorX<Scalar> inv_l = h.inverse_sq_lengthscales().array().sqrt().matrix();
  const MatrixX<Scalar> a = left * inv_l.asDiagonal();
  const MatrixX<Scalar> b = right * inv_l.asDiagonal();
  const VectorX<Scalar> na = a.rowwise().squaredNorm();
  const VectorX<Scalar> nb = b.rowwise().squaredNorm();
  MatrixX<Scalar> sq = (-2 * a * b.transpose()).eval();
  sq.colwise() += na;
  sq.rowwise() += nb.transpose();
  return (h.signal_variance() * (-sq.array().max(Scalar(0)) / 2).exp()).matrix();
}

/// Cholesky factor of K + sn2*I with an escalating diagonal jitter.
template <typename Scalar>
struct GramFactor {
  Eigen::LLT<MatrixX<Scalar>> llt;
  Scalar jitter = 0;
};

template <typename Scalar>
GramFactor<Scalar> factorize_gram(MatrixX<Scalar> gram) {
  const Eigen::Index d = gram.rows();
  GramFactor<Scalar> out;
  out.llt.compute(gram);
  if (out.llt.info() == Eigen::Success) return out;
  const Scalar base = gram.trace() / static_cast<Scalar>(d);
  for (Scalar level = Scalar(1e-10); level <= Scalar(1.5e-4); level *= 10) {
    const Scalar jitter = level * base;
    MatrixX<Scalar> g = gram;
    g.diagonal().array() += jitter;
    out.llt.compute(g);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw IllConditionedKernel("Gram matrix not positive definite after maximum jitter");
}

template <typename Scalar>
struct LikelihoodResult {
  Scalar value = 0;
  VectorX<Scalar> gradient;  // w.r.t. packed log hyperparameters
};

/// Log marginal likelihood of one output column and its gradient in log space.
template <typename Scalar>
LikelihoodResult<Scalar> log_marginal_likelihood(const MatrixX<Scalar>& inputs, const VectorX<Scalar>& y,
                                                 const Hyperparameters<Scalar>& h) {
  require(inputs.rows() == y.size(), "log_marginal_likelihood: row mismatch");
  const Eigen::Index d = inputs.rows();
  const Eigen::Index e = inputs.cols();
  const MatrixX<Scalar> kf = kernel_matrix(inputs, inputs, h);
  MatrixX<Scalar> gram = kf;
  gram.diagonal().array() += h.noise_variance();
  const GramFactor<Scalar> factor = factorize_gram(std::move(gram));
  const VectorX<Scalar> alpha = factor.llt.solve(y);
  const MatrixX<Scalar> lower = factor.llt.matrixL();

  LikelihoodResult<Scalar> out;
  out.value = -y.dot(alpha) / 2 - lower.diagonal().array().log().sum() -
              static_cast<Scalar>(d) / 2 * std::log(2 * std::numbers::pi_v<Scalar>);

  const MatrixX<Scalar> kinv = factor.llt.solve(MatrixX<Scalar>::Identity(d, d));
  const MatrixX<Scalar> w = alpha * alpha.transpose() - kinv;
  const MatrixX<Scalar> wk = w.cwiseProduct(kf);
  const VectorX<Scalar> inv_sq = h.inverse_sq_lengthscales();

  out.gradient.resize(e + 2);
  for (Eigen::Index c = 0; c < e; ++c) {
    Scalar acc = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const Scalar diff = inputs(i, c) - inputs(j, c);
        acc += wk(i, j) * diff * diff;
      }
    }
    out.gradient(c) = acc * inv_sq(c) / 2;
  }
  out.gradient(e) = wk.sum() / 2;
  out.gradient(e + 1) = h.noise_variance() * w.trace() / 2;
  return out;
}

}  // namespace gpmpc::gp
