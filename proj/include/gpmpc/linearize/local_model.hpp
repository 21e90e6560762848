#pragma once

#include "gpmpc/gp/moment_matching.hpp"
#include "gpmpc/linearize/extended_state.hpp"

#include <algorithm>
#include <cmath>

namespace gpmpc::lin {

enum class DerivativeScheme { central_difference };

/// s' ~ value + A (s - state) + B (u - control)
template <typename Scalar>
struct LocalModel {
  MatrixX<Scalar> A;
  MatrixX<Scalar> B;
  ExtendedState<Scalar> state;
  VectorX<Scalar> control;
  VectorX<Scalar> value;  // F'(state, control)
};

/// The deterministic extended-state map F'(s, u) = extend(propagate(collapse(s), u)).
template <typename Scalar>
VectorX<Scalar> extended_step(const gp::TrainedGP<Scalar>& gp, const ExtendedState<Scalar>& s,
                              const VectorX<Scalar>& u) {
  return extend(gp::propagate(gp, collapse(s), u)).vec();
}

template <typename Scalar>
Scalar difference_step(Scalar coordinate) {
  return std::max(Scalar(1e-6), Scalar(1e-6) * std::abs(coordinate));
}

/// Jacobians of F' at (at, u). Coordinates in LinearizationFailure count the
/// extended state first, then the controls.
///
/// When the covariance root at the operating point is zero, F' is even in
/// each root coordinate (S and -S give the same S S^T), so the central
/// differences of those columns are exactly zero and are not evaluated.
template <typename Scalar>
LocalModel<Scalar> linearize(const gp::TrainedGP<Scalar>& gp, const ExtendedState<Scalar>& at,
                             const VectorX<Scalar>& u,
                             DerivativeScheme scheme = DerivativeScheme::central_difference) {
  require(scheme == DerivativeScheme::central_difference, "linearize: unsupported scheme");
  const Eigen::Index n = gp.state_dim();
  const Eigen::Index m = gp.control_dim();
  require(at.state_dim() == n, "linearize: state dimension mismatch");
  require(u.size() == m, "linearize: control dimension mismatch");
  const Eigen::Index ns = at.size();

  auto eval = [&](const VectorX<Scalar>& s, const VectorX<Scalar>& control, Eigen::Index coordinate) {
    try {
      VectorX<Scalar> out = extended_step(gp, ExtendedState<Scalar>(s, n), control);
      if (!out.allFinite()) throw LinearizationFailure("linearize: non-finite propagation", coordinate);
      return out;
    } catch (const LinearizationFailure&) {
      throw;
    } catch (const Error& e) {
      throw LinearizationFailure(std::string("linearize: ") + e.what(), coordinate);
    }
  };

  LocalModel<Scalar> model;
  model.state = at;
  model.control = u;
  model.value = eval(at.vec(), u, -1);
  model.A = MatrixX<Scalar>::Zero(ns, ns);
  model.B = MatrixX<Scalar>::Zero(ns, m);

  const bool zero_root = at.vec().tail(n * n).isZero(0);
  const Eigen::Index active = zero_root ? n : ns;
  for (Eigen::Index j = 0; j < active; ++j) {
    const Scalar h = difference_step(at.vec()(j));
    VectorX<Scalar> plus = at.vec(), minus = at.vec();
    plus(j) += h;
    minus(j) -= h;
    model.A.col(j) = (eval(plus, u, j) - eval(minus, u, j)) / (Scalar(2) * h);
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    const Scalar h = difference_step(u(k));
    VectorX<Scalar> plus = u, minus = u;
    plus(k) += h;
    minus(k) -= h;
    model.B.col(k) = (eval(at.vec(), plus, ns + k) - eval(at.vec(), minus, ns + k)) / (Scalar(2) * h);
  }
  return model;
}

}  // namespace gpmpc::lin
