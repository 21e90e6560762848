#pragma once

#include "gpmpc/gp/moment_matching.hpp"
#include "gpmpc/mpc/condensed.hpp"
#include "gpmpc/qp/active_set.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gpmpc::mpc {

template <typename Scalar>
struct ControllerState {
  VectorX<Scalar> previous_control;
  std::optional<qp::QPSolution<Scalar>> previous_solution;
  gp::GaussianState<Scalar> belief;

  static ControllerState initial(const VectorX<Scalar>& u0, Eigen::Index n) {
    return ControllerState{u0, std::nullopt, gp::GaussianState<Scalar>(VectorX<Scalar>::Zero(n))};
  }
};

template <typename Scalar>
struct StepDiagnostics {
  int qp_iterations = 0;
  qp::QPStatus qp_status = qp::QPStatus::optimal;
  Scalar cost = 0;  // predicted horizon cost J at the solution
  int rows_dropped = 0;
  int rows_relaxed = 0;
  bool tightening_failed = false;  // nominal covariance propagation failed; no tightening this step
  bool linearization_failed = false;
  bool warm_started = false;
  VectorX<Scalar> predicted_mean;  // local-model mean one step ahead
};

template <typename Scalar>
struct StepResult {
  VectorX<Scalar> control;
  ControllerState<Scalar> state;
  StepDiagnostics<Scalar> diagnostics;
};

namespace detail {

/// QP feasibility is only guaranteed to ~1e-9, so values that land a hair
/// outside (or just inside) a bound are put exactly on it.
template <typename Scalar>
VectorX<Scalar> snap_to_bounds(VectorX<Scalar> u, const VectorX<Scalar>& lo, const VectorX<Scalar>& hi) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Scalar tol_hi = Scalar(1e-7) * std::max(Scalar(1), std::abs(hi(i)));
    const Scalar tol_lo = Scalar(1e-7) * std::max(Scalar(1), std::abs(lo(i)));
    if (u(i) > hi(i) + tol_hi || u(i) < lo(i) - tol_lo)
      throw ContractViolation("mpc_step: control outside bounds after QP solve");
    if (std::abs(u(i) - hi(i)) <= Scalar(1e-2) * tol_hi || u(i) > hi(i)) u(i) = hi(i);
    if (std::abs(u(i) - lo(i)) <= Scalar(1e-2) * tol_lo || u(i) < lo(i)) u(i) = lo(i);
  }
  return u;
}

}  // namespace detail

/// One receding-horizon step: reset the belief to the measurement, linearize
/// the extended-state GP map at (s_k, u_{k-1}), build and solve the condensed
/// QP, and apply the first control increment.
template <typename Scalar>
StepResult<Scalar> mpc_step(const ControllerState<Scalar>& ctrl, const gp::TrainedGP<Scalar>& gp,
                            const VectorX<Scalar>& measurement, const std::vector<VectorX<Scalar>>& refs,
                            const MPCConfig<Scalar>& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.state_dim();
  const Eigen::Index m = cfg.control_dim();
  require(gp.state_dim() == n && gp.control_dim() == m, "mpc_step: model and config dimensions differ");
  require(measurement.size() == n && measurement.allFinite(), "mpc_step: measurement must be finite with size n");
  require(ctrl.previous_control.size() == m, "mpc_step: previous control size");
  require((ctrl.previous_control.array() >= cfg.u_min.array()).all() &&
              (ctrl.previous_control.array() <= cfg.u_max.array()).all(),
          "mpc_step: previous control outside input bounds");

  StepResult<Scalar> out;
  out.state = ctrl;
  out.state.belief = gp::GaussianState<Scalar>(measurement);
  const lin::ExtendedState<Scalar> s_k = lin::extend(out.state.belief);
  const VectorX<Scalar>& u_prev = ctrl.previous_control;

  std::optional<lin::LocalModel<Scalar>> model;
  try {
    model = lin::linearize(gp, s_k, u_prev);
  } catch (const LinearizationFailure&) {
    out.control = u_prev;
    out.state.previous_solution.reset();
    out.diagnostics.linearization_failed = true;
    out.diagnostics.predicted_mean = measurement;
    return out;
  }

  std::vector<MatrixX<Scalar>> nominal_cov;
  if (cfg.tighten) {
    try {
      gp::GaussianState<Scalar> b = out.state.belief;
      for (int j = 0; j < cfg.horizon; ++j) {
        b = gp::propagate(gp, b, u_prev);
        nominal_cov.push_back(b.cov());
      }
    } catch (const Error&) {
      nominal_cov.clear();
      out.diagnostics.tightening_failed = true;
    }
  }
  const bool use_tightening = cfg.tighten && !nominal_cov.empty();
  const Condensed<Scalar> cond =
      build_condensed(*model, s_k, u_prev, refs, cfg, use_tightening ? &nominal_cov : nullptr);
  for (Eigen::Index j = 0; j < cond.tightening.rows(); ++j)
    for (Eigen::Index i = 0; i < cond.tightening.cols(); ++i) {
      out.diagnostics.rows_dropped += cond.tightening(j, i) == static_cast<int>(RowTightening::dropped);
      out.diagnostics.rows_relaxed += cond.tightening(j, i) == static_cast<int>(RowTightening::relaxed);
    }

  const Eigen::Index hm = cond.qp.dim();
  VectorX<Scalar> start = VectorX<Scalar>::Zero(hm);
  std::optional<qp::WorkingSet> warm;
  if (cfg.warm_start && ctrl.previous_solution && ctrl.previous_solution->delta_u.size() == hm &&
      ctrl.previous_solution->working_set.valid_for(cond.qp.rows())) {
    // The working set only means something at the point it came from; when
    // that point is infeasible now, restart cold from dU = 0.
    if (cond.qp.max_violation(ctrl.previous_solution->delta_u) <= Scalar(1e-9)) {
      start = ctrl.previous_solution->delta_u;
      warm = ctrl.previous_solution->working_set;
      out.diagnostics.warm_started = true;
    }
  }
  qp::SolveOptions opt;
  opt.max_iterations = cfg.qp_max_iterations;
  const qp::QPSolution<Scalar> sol = qp::solve(cond.qp, start, warm, opt);
  if (sol.status == qp::QPStatus::infeasible_start)
    throw ContractViolation("mpc_step: QP start infeasible; the condensed problem keeps dU = 0 feasible");

  out.control = detail::snap_to_bounds(VectorX<Scalar>(u_prev + sol.delta_u.head(m)), cfg.u_min, cfg.u_max);
  out.state.previous_control = out.control;
  out.state.previous_solution = sol;
  out.diagnostics.qp_iterations = sol.iterations;
  out.diagnostics.qp_status = sol.status;
  out.diagnostics.cost = cond.cost(sol.delta_u);
  out.diagnostics.predicted_mean = cond.mats.predict(sol.delta_u).head(n);
  return out;
}

}  // namespace gpmpc::mpc
