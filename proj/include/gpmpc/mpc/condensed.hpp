#pragma once

#include "gpmpc/linearize/local_model.hpp"
#include "gpmpc/mpc/config.hpp"
#include "gpmpc/mpc/cost.hpp"
#include "gpmpc/qp/problem.hpp"

#include <optional>
#include <vector>

namespace gpmpc::mpc {

/// Bound used for rows that carry no constraint (covariance-root rows and
/// dropped state rows).
inline constexpr double kUnbounded = 1e9;

enum class RowTightening : int {
  tightened = 0,  // two-sigma bounds applied
  dropped = 1,    // tightened bounds crossed; row unconstrained this step
  relaxed = 2,    // nominal prediction already violated the tightened bound; bound moved to the nominal value
};

/// Stacked quantities of the condensed problem over the horizon.
///
/// Z = z_free + Tz Bt dU and U = u_bar + Tu dU, where z_free = s_bar + Tz At d0
/// is the prediction with every control held at u_prev, and d0 is the drift of
/// the local model at (s_k, u_prev).
template <typename Scalar>
struct CondensedMatrices {
  MatrixX<Scalar> Qt, Rt;  // block-diagonal weights
  MatrixX<Scalar> Mz;      // picks the mean entries out of Z (Hn x H(n+n^2))
  MatrixX<Scalar> Tu, Tz;  // block unit lower-triangular accumulators
  MatrixX<Scalar> At, Bt;  // [I; A; ...; A^{H-1}] and the block-Toeplitz A^{i-j} B
  VectorX<Scalar> r_star;  // [r_1, 0, ..., r_H, 0]
  VectorX<Scalar> drift;   // d0 = F'(s_k, u_prev) - s_k under the local model
  VectorX<Scalar> z_free;
  VectorX<Scalar> u_bar;
  MatrixX<Scalar> z_gain;  // Tz Bt

  VectorX<Scalar> predict(const VectorX<Scalar>& du) const { return z_free + z_gain * du; }
  VectorX<Scalar> controls(const VectorX<Scalar>& du) const { return u_bar + Tu * du; }
};

template <typename Scalar>
struct Condensed {
  CondensedMatrices<Scalar> mats;
  qp::QPProblem<Scalar> qp;
  // tightening(j, i): status of the mean row for coordinate i at step j + 1.
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> tightening;

  /// Cost J = sum ||Z - r*||^2 + ||U||^2 in the weights; the QP objective is J / 2.
  Scalar cost(const VectorX<Scalar>& du) const { return Scalar(2) * qp.objective(du); }
};

namespace detail {

template <typename Scalar>
MatrixX<Scalar> block_lower_ones(Eigen::Index h, Eigen::Index block) {
  MatrixX<Scalar> t = MatrixX<Scalar>::Zero(h * block, h * block);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) t.block(i * block, j * block, block, block).setIdentity();
  return t;
}

}  // namespace detail

/// Builds the condensed QP in the increments dU. `tighten_cov`, when given,
/// holds one predicted state covariance per horizon step for the two-sigma
/// tightening of the mean rows; without it the mean rows use the raw bounds.
template <typename Scalar>
Condensed<Scalar> build_condensed(const lin::LocalModel<Scalar>& model, const lin::ExtendedState<Scalar>& s_k,
                                  const VectorX<Scalar>& u_prev, const std::vector<VectorX<Scalar>>& refs,
                                  const MPCConfig<Scalar>& cfg,
                                  const std::vector<MatrixX<Scalar>>* tighten_cov = nullptr) {
  cfg.validate();
  const Eigen::Index n = cfg.state_dim();
  const Eigen::Index m = cfg.control_dim();
  const Eigen::Index h = cfg.horizon;
  const Eigen::Index ns = n + n * n;
  require(s_k.state_dim() == n, "build_condensed: state dimension");
  require(model.A.rows() == ns && model.A.cols() == ns && model.B.rows() == ns && model.B.cols() == m,
          "build_condensed: local model dimensions");
  require(u_prev.size() == m, "build_condensed: control dimension");
  require(static_cast<Eigen::Index>(refs.size()) == h, "build_condensed: need one reference per horizon step");
  for (const auto& r : refs) require(r.size() == n, "build_condensed: reference dimension");
  if (tighten_cov) require(static_cast<Eigen::Index>(tighten_cov->size()) == h, "build_condensed: covariance count");

  CondensedMatrices<Scalar> c;
  const Eigen::Index nz = h * ns;
  const Eigen::Index nu = h * m;

  c.drift = model.value + model.A * (s_k.vec() - model.state.vec()) + model.B * (u_prev - model.control) - s_k.vec();

  std::vector<MatrixX<Scalar>> powers{MatrixX<Scalar>::Identity(ns, ns)};
  for (Eigen::Index j = 1; j < h; ++j) powers.push_back(model.A * powers.back());
  c.At.resize(nz, ns);
  c.Bt = MatrixX<Scalar>::Zero(nz, nu);
  for (Eigen::Index i = 0; i < h; ++i) {
    c.At.middleRows(i * ns, ns) = powers[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j <= i; ++j)
      c.Bt.block(i * ns, j * m, ns, m) = powers[static_cast<std::size_t>(i - j)] * model.B;
  }
  c.Tz = detail::block_lower_ones<Scalar>(h, ns);
  c.Tu = detail::block_lower_ones<Scalar>(h, m);

  c.Qt = MatrixX<Scalar>::Zero(nz, nz);
  c.Rt = MatrixX<Scalar>::Zero(nu, nu);
  c.Mz = MatrixX<Scalar>::Zero(h * n, nz);
  c.r_star = VectorX<Scalar>::Zero(nz);
  c.u_bar.resize(nu);
  VectorX<Scalar> s_bar(nz);
  const VectorX<Scalar> vec_q = Eigen::Map<const VectorX<Scalar>>(cfg.Q.data(), n * n);
  for (Eigen::Index j = 0; j < h; ++j) {
    c.Qt.block(j * ns, j * ns, n, n) = cfg.Q;
    c.Qt.block(j * ns + n, j * ns + n, n * n, n * n) = vec_q.asDiagonal();
    c.Rt.block(j * m, j * m, m, m) = cfg.R;
    c.Mz.block(j * n, j * ns, n, n).setIdentity();
    c.r_star.segment(j * ns, n) = refs[static_cast<std::size_t>(j)];
    c.u_bar.segment(j * m, m) = u_prev;
    s_bar.segment(j * ns, ns) = s_k.vec();
  }

  c.z_free = s_bar + c.Tz * (c.At * c.drift);
  c.z_gain = c.Tz * c.Bt;

  MatrixX<Scalar> phi = c.z_gain.transpose() * c.Qt * c.z_gain + c.Tu.transpose() * c.Rt * c.Tu;
  symmetrize(phi);
  const VectorX<Scalar> err = c.z_free - c.r_star;
  const VectorX<Scalar> psi = c.z_gain.transpose() * (c.Qt * err) + c.Tu.transpose() * (c.Rt * c.u_bar);
  const Scalar constant = Scalar(0.5) * (err.dot(c.Qt * err) + c.u_bar.dot(c.Rt * c.u_bar));

  // G = [Tu; Tz Bt], lower <= G dU <= upper, stacked as [G; -G] dU <= [upper; -lower].
  const Eigen::Index ng = nu + nz;
  MatrixX<Scalar> g(ng, nu);
  g << c.Tu, c.z_gain;
  VectorX<Scalar> lower(ng), upper(ng);
  for (Eigen::Index j = 0; j < h; ++j) {
    lower.segment(j * m, m) = cfg.u_min - u_prev;
    upper.segment(j * m, m) = cfg.u_max - u_prev;
  }
  lower.tail(nz).setConstant(-Scalar(kUnbounded));
  upper.tail(nz).setConstant(Scalar(kUnbounded));

  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> status =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(h, n);
  for (Eigen::Index j = 0; j < h; ++j) {
    VectorX<Scalar> lo = cfg.x_min, hi = cfg.x_max;
    std::vector<bool> dropped(static_cast<std::size_t>(n), false);
    if (tighten_cov && cfg.tighten) {
      const MatrixX<Scalar>& cov = (*tighten_cov)[static_cast<std::size_t>(j)];
      const VectorX<Scalar> sd = cov.diagonal().cwiseMax(Scalar(0)).cwiseSqrt();
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar tl = cfg.x_min(i) + Scalar(2) * sd(i);
        const Scalar tu = cfg.x_max(i) - Scalar(2) * sd(i);
        if (tl > tu) {
          dropped[static_cast<std::size_t>(i)] = true;
          status(j, i) = static_cast<int>(RowTightening::dropped);
        } else {
          lo(i) = tl;
          hi(i) = tu;
        }
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dropped[static_cast<std::size_t>(i)]) continue;
      const Eigen::Index row = nu + j * ns + i;
      const Scalar nominal = c.z_free(j * ns + i);
      Scalar l = lo(i) - nominal, u = hi(i) - nominal;
      // Keep dU = 0 feasible: a bound the held-control prediction already
      // violates is moved to that prediction, so the QP may not make it worse.
      if (l > 0) {
        l = 0;
        status(j, i) = static_cast<int>(RowTightening::relaxed);
      }
      if (u < 0) {
        u = 0;
        status(j, i) = static_cast<int>(RowTightening::relaxed);
      }
      lower(row) = std::max(l, -Scalar(kUnbounded));
      upper(row) = std::min(u, Scalar(kUnbounded));
    }
  }

  MatrixX<Scalar> g_tilde(2 * ng, nu);
  g_tilde << g, -g;
  VectorX<Scalar> d(2 * ng);
  d << upper, -lower;
  qp::QPProblem<Scalar> problem(std::move(phi), psi, std::move(g_tilde), std::move(d), constant);
  return Condensed<Scalar>{std::move(c), std::move(problem), std::move(status)};
}

}  // namespace gpmpc::mpc
