#pragma once

#include "gpmpc/mpc/config.hpp"

#include <cmath>

namespace gpmpc::mpc {

/// E[(x-r)' Q (x-r)] + u' R u for x ~ N(mu, sigma).
template <typename Scalar>
Scalar expected_cost(const VectorX<Scalar>& mu, const MatrixX<Scalar>& sigma, const VectorX<Scalar>& u,
                     const VectorX<Scalar>& r, const MPCConfig<Scalar>& cfg) {
  require(mu.size() == cfg.state_dim() && r.size() == mu.size(), "expected_cost: state size");
  require(sigma.rows() == mu.size() && sigma.cols() == mu.size(), "expected_cost: covariance shape");
  require(u.size() == cfg.control_dim(), "expected_cost: control size");
  const VectorX<Scalar> e = mu - r;
  return e.dot(cfg.Q * e) + u.dot(cfg.R * u) + (cfg.Q * sigma).trace();
}

template <typename Scalar>
struct TightBounds {
  VectorX<Scalar> lower;
  VectorX<Scalar> upper;
};

/// Two-sigma tightening x_min + 2 sd <= mu <= x_max - 2 sd, elementwise with
/// sd = sqrt(diag sigma).
template <typename Scalar>
TightBounds<Scalar> tighten_bounds(const VectorX<Scalar>& x_min, const VectorX<Scalar>& x_max,
                                   const MatrixX<Scalar>& sigma, Scalar confidence = Scalar(0.95)) {
  require(std::abs(confidence - Scalar(0.95)) < Scalar(1e-12), "tighten_bounds: only confidence 0.95 is supported");
  require(x_min.size() == x_max.size() && sigma.rows() == x_min.size() && sigma.cols() == x_min.size(),
          "tighten_bounds: size mismatch");
  const VectorX<Scalar> sd = sigma.diagonal().cwiseMax(Scalar(0)).cwiseSqrt();
  TightBounds<Scalar> out{x_min + Scalar(2) * sd, x_max - Scalar(2) * sd};
  for (Eigen::Index i = 0; i < x_min.size(); ++i)
    if (out.lower(i) > out.upper(i)) throw InfeasibleTightening("tighten_bounds: bounds cross", i);
  return out;
}

}  // namespace gpmpc::mpc
