#pragma once

#include "gpmpc/common.hpp"
#include "gpmpc/gp/gaussian_state.hpp"
#include "gpmpc/gp/model.hpp"

#include <cmath>

namespace gpmpc::gp {

template <typename Scalar>
struct UncertainPrediction {
  VectorX<Scalar> mean;            // E[dx]
  MatrixX<Scalar> cov;             // Cov[dx]
  MatrixX<Scalar> input_output;    // Cov[x~, dx], (n+m) x n
  VectorX<Scalar> expected_variance;  // E[Var_f[dx_a]]; cov minus its diagonal is Var[E_f[dx]]

  /// Cov[x_k, dx_k], the state rows of input_output.
  MatrixX<Scalar> state_output() const { return input_output.topRows(cov.rows()); }
};

/// Exact first and second moments of the GP prediction when the input is
/// Gaussian, for the SE kernel. A zero input covariance takes the point path.
template <typename Scalar>
UncertainPrediction<Scalar> predict_uncertain(const TrainedGP<Scalar>& gp, const UncertainInput<Scalar>& input) {
  const Eigen::Index e = gp.input_dim();
  const Eigen::Index n = gp.state_dim();
  if (input.mean.size() != e || input.cov.rows() != e || input.cov.cols() != e)
    throw ContractViolation("predict_uncertain: input dimension mismatch");

  UncertainPrediction<Scalar> out;
  if (input.cov.isZero(0)) {
    const PointPrediction<Scalar> p = predict_point(gp, input.mean);
    out.mean = p.mean;
    out.cov = p.variance.asDiagonal();
    out.input_output = MatrixX<Scalar>::Zero(e, n);
    out.expected_variance = p.variance;
    return out;
  }

  const MatrixX<Scalar>& s = input.cov;
  const MatrixX<Scalar> nu = gp.dataset().inputs.rowwise() - input.mean.transpose();  // D x E

  out.mean.resize(n);
  out.cov.resize(n, n);
  out.input_output.resize(e, n);
  out.expected_variance.resize(n);

  // Per-output quantities reused by the covariance pass.
  std::vector<VectorX<Scalar>> log_k(static_cast<std::size_t>(n));   // log k_a(x_i, mean)
  std::vector<MatrixX<Scalar>> scaled(static_cast<std::size_t>(n));  // nu * Lambda_a^{-1}

  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& h = gp.hyper(a);
    const VectorX<Scalar> inv_sq = h.inverse_sq_lengthscales();
    const VectorX<Scalar> lambda = h.lengthscales().array().square().matrix();

    MatrixX<Scalar> b = s;
    b.diagonal() += lambda;
    Eigen::LLT<MatrixX<Scalar>> b_llt(b);
    if (b_llt.info() != Eigen::Success) throw DegenerateInput("predict_uncertain: S + Lambda not positive definite");
    const MatrixX<Scalar> t = b_llt.solve(nu.transpose()).transpose();  // rows (S + Lambda)^{-1} nu_i

    // sqrt(det(S Lambda^{-1} + I)) = sqrt(det(S + Lambda) / det(Lambda))
    const Scalar log_det_ratio =
        2 * b_llt.matrixLLT().diagonal().array().log().sum() - lambda.array().log().sum();
    const Scalar c = h.signal_variance() * std::exp(-log_det_ratio / 2);
    if (!std::isfinite(c)) throw DegenerateInput("predict_uncertain: degenerate normalizer");

    const VectorX<Scalar> q = c * (-(nu.cwiseProduct(t)).rowwise().sum() / 2).array().exp().matrix();
    const VectorX<Scalar>& beta = gp.alpha(a);
    out.mean(a) = beta.dot(q);
    out.input_output.col(a) = s * (t.transpose() * beta.cwiseProduct(q));

    scaled[static_cast<std::size_t>(a)] = nu * inv_sq.asDiagonal();
    log_k[static_cast<std::size_t>(a)] =
        (std::log(h.signal_variance()) - (nu.array().square().matrix() * inv_sq).array() / 2).matrix();
  }

  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& ia = scaled[static_cast<std::size_t>(a)];
    const VectorX<Scalar> inv_a = gp.hyper(a).inverse_sq_lengthscales();
    for (Eigen::Index b = 0; b <= a; ++b) {
      const auto& ib = scaled[static_cast<std::size_t>(b)];
      const VectorX<Scalar> inv_b = gp.hyper(b).inverse_sq_lengthscales();

      MatrixX<Scalar> r = s * (inv_a + inv_b).asDiagonal();
      r.diagonal().array() += 1;
      Eigen::PartialPivLU<MatrixX<Scalar>> r_lu(r);
      const Scalar det_r = r_lu.determinant();
      if (!(det_r > 0) || !std::isfinite(det_r)) throw DegenerateInput("predict_uncertain: singular inner matrix");
      MatrixX<Scalar> m = r_lu.solve(s);
      symmetrize(m);

      const VectorX<Scalar> qa = (ia * m).cwiseProduct(ia).rowwise().sum() / 2 + log_k[static_cast<std::size_t>(a)];
      const VectorX<Scalar> qb = (ib * m).cwiseProduct(ib).rowwise().sum() / 2 + log_k[static_cast<std::size_t>(b)];
      MatrixX<Scalar> logq = ia * m * ib.transpose();
      logq.colwise() += qa;
      logq.rowwise() += qb.transpose();
      const MatrixX<Scalar> q = (logq.array() - std::log(det_r) / 2).exp().matrix();

      Scalar value = gp.alpha(a).dot(q * gp.alpha(b)) - out.mean(a) * out.mean(b);
      if (a == b) {
        out.expected_variance(a) = gp.hyper(a).signal_variance() - gp.gram_inverse(a).cwiseProduct(q).sum();
        value += out.expected_variance(a);
      }
      out.cov(a, b) = value;
      out.cov(b, a) = value;
    }
  }
  if (!out.mean.allFinite() || !out.cov.allFinite())
    throw DegenerateInput("predict_uncertain: non-finite moments");
  return out;
}

/// One step of the moment-matched state recursion.
template <typename Scalar>
GaussianState<Scalar> propagate(const TrainedGP<Scalar>& gp, const GaussianState<Scalar>& state,
                                const VectorX<Scalar>& control) {
  require(state.dim() == gp.state_dim(), "propagate: state dimension mismatch");
  require(control.size() == gp.control_dim(), "propagate: control dimension mismatch");
  const UncertainPrediction<Scalar> p = predict_uncertain(gp, UncertainInput<Scalar>::from_state(state, control));
  const MatrixX<Scalar> cross = p.state_output();
  MatrixX<Scalar> cov = state.cov() + p.cov + cross + cross.transpose();
  if (!make_psd(cov)) throw PropagationInstability("propagate: covariance indefinite beyond clamp tolerance");
  try {
    return GaussianState<Scalar>(state.mean() + p.mean, std::move(cov));
  } catch (const InvalidCovariance& err) {
    throw PropagationInstability(err.what());
  }
}

}  // namespace gpmpc::gp
