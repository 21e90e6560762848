#pragma once

#include "gpmpc/qp/problem.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace gpmpc::qp {

enum class KktPath { automatic, block_inverse, qr };

template <typename Scalar>
struct KktStep {
  VectorX<Scalar> delta;
  VectorX<Scalar> multipliers;  // aligned with WorkingSet::indices()
  bool used_qr = false;
  Eigen::Index rank = 0;
};

namespace detail {

template <typename Scalar>
MatrixX<Scalar> active_rows(const QPProblem<Scalar>& qp, const WorkingSet& ws) {
  MatrixX<Scalar> ga(static_cast<Eigen::Index>(ws.size()), qp.dim());
  for (std::size_t r = 0; r < ws.size(); ++r) ga.row(static_cast<Eigen::Index>(r)) = qp.g().row(ws.indices()[r]);
  return ga;
}

template <typename Scalar>
VectorX<Scalar> active_rhs(const QPProblem<Scalar>& qp, const WorkingSet& ws, const VectorX<Scalar>& x) {
  VectorX<Scalar> b(static_cast<Eigen::Index>(ws.size()));
  for (std::size_t r = 0; r < ws.size(); ++r) {
    const Eigen::Index i = ws.indices()[r];
    b(static_cast<Eigen::Index>(r)) = qp.bounds()(i) - qp.g().row(i).dot(x);
  }
  return b;
}

inline constexpr double kRankThreshold = 1e-10;

}  // namespace detail

/// Solves  [Phi  G_A'] [delta ]   [-psi - Phi x  ]
///         [G_A   0  ] [lambda] = [d_A - G_A x   ]
///
/// The block-inverse formulas need G_A of full row rank. Otherwise G_A' is
/// factored by column-pivoted QR; delta is split into range and null-space
/// parts, multipliers are recovered for a basis of independent rows and the
/// dependent rows get zero.
template <typename Scalar>
KktStep<Scalar> kkt_step(const QPProblem<Scalar>& qp, const WorkingSet& ws, const VectorX<Scalar>& x,
                         KktPath path = KktPath::automatic) {
  require(x.size() == qp.dim(), "kkt_step: iterate dimension");
  require(ws.valid_for(qp.rows()), "kkt_step: working set index out of range");
  const Eigen::Index hm = qp.dim();
  const Eigen::Index na = static_cast<Eigen::Index>(ws.size());
  const auto& llt = qp.phi_llt();
  const VectorX<Scalar> grad = qp.psi() + qp.phi() * x;

  KktStep<Scalar> out;
  if (na == 0) {
    out.delta = -llt.solve(grad);
    out.multipliers.resize(0);
    return out;
  }

  const MatrixX<Scalar> ga = detail::active_rows(qp, ws);
  const VectorX<Scalar> b = detail::active_rhs(qp, ws, x);
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(ga.transpose());
  qr.setThreshold(Scalar(detail::kRankThreshold));
  const Eigen::Index rank = qr.rank();
  out.rank = rank;

  const bool full_rank = rank == na;
  if (path == KktPath::block_inverse) require(full_rank, "kkt_step: block-inverse path needs full row rank");
  const bool use_qr = path == KktPath::qr || (path == KktPath::automatic && !full_rank);

  if (!use_qr) {
    // L1 = Phi^-1 - Y M^-1 Y',  L2 = M^-1 Y',  L3 = -M^-1  with Y = Phi^-1 G_A', M = G_A Y
    const MatrixX<Scalar> y = llt.solve(ga.transpose());
    MatrixX<Scalar> mm = ga * y;
    symmetrize(mm);
    const Eigen::LDLT<MatrixX<Scalar>> m_fact(mm);
    const VectorX<Scalar> phi_inv_grad = llt.solve(grad);
    out.multipliers = -m_fact.solve(VectorX<Scalar>(ga * phi_inv_grad + b));
    out.delta = -phi_inv_grad - y * out.multipliers;
    return out;
  }

  out.used_qr = true;
  const MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(hm, hm);
  const MatrixX<Scalar> r11 =
      qr.matrixR().topLeftCorner(rank, rank).template triangularView<Eigen::Upper>().toDenseMatrix();
  const auto q1 = q.leftCols(rank);
  const auto q2 = q.rightCols(hm - rank);
  const auto perm = qr.colsPermutation().indices();

  // Basic rows: G_B' = Q1 R11, so G_B delta = b_B fixes Q1' delta.
  VectorX<Scalar> b_basic(rank);
  for (Eigen::Index k = 0; k < rank; ++k) b_basic(k) = b(perm(k));
  const VectorX<Scalar> range_part = r11.transpose().template triangularView<Eigen::Lower>().solve(b_basic);
  VectorX<Scalar> delta = q1 * range_part;
  if (hm > rank) {
    MatrixX<Scalar> reduced = q2.transpose() * qp.phi() * q2;
    symmetrize(reduced);
    const VectorX<Scalar> z = -reduced.llt().solve(VectorX<Scalar>(q2.transpose() * (grad + qp.phi() * delta)));
    delta += q2 * z;
  }
  const VectorX<Scalar> residual = -(grad + qp.phi() * delta);
  const VectorX<Scalar> lambda_basic =
      r11.template triangularView<Eigen::Upper>().solve(VectorX<Scalar>(q1.transpose() * residual));
  out.multipliers = VectorX<Scalar>::Zero(na);
  for (Eigen::Index k = 0; k < rank; ++k) out.multipliers(perm(k)) = lambda_basic(k);
  out.delta = std::move(delta);
  return out;
}

template <typename Scalar>
struct StepLength {
  Scalar kappa = 1;
  std::optional<Eigen::Index> blocking;
};

/// Largest step in [0, 1] along delta that keeps the rows outside `ws`
/// feasible. Rows whose directional derivative is at most 1e-12 are ignored.
template <typename Scalar>
StepLength<Scalar> step_length(const QPProblem<Scalar>& qp, const WorkingSet& ws, const VectorX<Scalar>& x,
                               const VectorX<Scalar>& delta) {
  StepLength<Scalar> out;
  const VectorX<Scalar> slope = qp.g() * delta;
  const VectorX<Scalar> slack = qp.bounds() - qp.g() * x;
  for (Eigen::Index i = 0; i < qp.rows(); ++i) {
    if (slope(i) <= Scalar(1e-12) || ws.contains(i)) continue;
    const Scalar ratio = std::max(Scalar(0), slack(i) / slope(i));
    if (ratio < out.kappa) {
      out.kappa = ratio;
      out.blocking = i;
    }
  }
  return out;
}

enum class QPStatus { optimal, max_iterations, infeasible_start };

inline const char* to_string(QPStatus s) {
  switch (s) {
    case QPStatus::optimal: return "optimal";
    case QPStatus::max_iterations: return "max-iterations";
    case QPStatus::infeasible_start: return "infeasible-start";
  }
  return "unknown";
}

template <typename Scalar>
struct QPSolution {
  VectorX<Scalar> delta_u;
  VectorX<Scalar> multipliers;  // aligned with working_set.indices()
  WorkingSet working_set;
  int iterations = 0;
  QPStatus status = QPStatus::optimal;
  int perturbations = 0;  // anti-cycling perturbations of psi
};

struct SolveOptions {
  int max_iterations = -1;  // -1: 3 * constraint count + dimension
  KktPath path = KktPath::automatic;
  double start_tolerance = 1e-9;
  double warm_tolerance = 1e-7;
};

/// Per-iteration record, for testing monotonicity and feasibility.
template <typename Scalar>
struct Iterate {
  VectorX<Scalar> x;
  Scalar objective;
  std::size_t working_set_size;
};

/// Primal active-set method. `start` must be feasible. Without `warm` the
/// initial working set is every row active at `start`; with it, the warm set
/// is kept but pruned to rows that actually hold with equality.
template <typename Scalar>
QPSolution<Scalar> solve(const QPProblem<Scalar>& problem, const VectorX<Scalar>& start,
                         const std::optional<WorkingSet>& warm = std::nullopt, const SolveOptions& options = {},
                         std::vector<Iterate<Scalar>>* trace = nullptr) {
  require(start.size() == problem.dim(), "solve: start dimension");
  QPSolution<Scalar> sol;
  sol.delta_u = start;
  if (problem.rows() > 0 && problem.max_violation(start) > Scalar(options.start_tolerance)) {
    sol.status = QPStatus::infeasible_start;
    return sol;
  }

  const VectorX<Scalar> slack0 = problem.bounds() - problem.g() * start;
  auto active_at_start = [&](Eigen::Index i, double tol) {
    return std::abs(slack0(i)) <= Scalar(tol) * std::max(Scalar(1), std::abs(problem.bounds()(i)));
  };
  WorkingSet ws;
  if (warm) {
    for (Eigen::Index i : warm->indices())
      if (i >= 0 && i < problem.rows() && active_at_start(i, options.warm_tolerance)) ws.add(i);
  } else {
    for (Eigen::Index i = 0; i < problem.rows(); ++i)
      if (active_at_start(i, options.start_tolerance)) ws.add(i);
  }

  const int budget = options.max_iterations >= 0 ? options.max_iterations
                                                 : static_cast<int>(3 * problem.rows() + problem.dim());
  const Scalar psi_scale = Scalar(1) + problem.psi().cwiseAbs().maxCoeff();
  const Scalar lambda_tol = Scalar(1e-11) * psi_scale;

  QPProblem<Scalar> qp = problem;
  VectorX<Scalar> x = start;
  std::set<std::vector<Eigen::Index>> seen_here{ws.sorted()};
  auto enter = [&](const WorkingSet& next) {
    if (seen_here.insert(next.sorted()).second) return;
    // Re-entering a working set at the same iterate: break the tie with a
    // tiny deterministic tilt of the linear term.
    VectorX<Scalar> tilt(qp.dim());
    for (Eigen::Index i = 0; i < tilt.size(); ++i) tilt(i) = Scalar(1) + Scalar(i) / Scalar(tilt.size());
    qp = qp.with_psi(VectorX<Scalar>(qp.psi() + Scalar(1e-10) * psi_scale * tilt));
    ++sol.perturbations;
    seen_here.clear();
    seen_here.insert(next.sorted());
  };
  if (trace) trace->push_back({x, problem.objective(x), ws.size()});

  for (int it = 0; it < budget; ++it) {
    sol.iterations = it + 1;
    const KktStep<Scalar> step = kkt_step(qp, ws, x, options.path);
    // A full working set pins x; otherwise the KKT solve only returns
    // rounding noise proportional to the gradient over the curvature.
    const VectorX<Scalar> grad = qp.phi() * x + qp.psi();
    const Scalar curvature = std::max(qp.phi().cwiseAbs().maxCoeff(), Scalar(1e-300));
    const Scalar step_scale = Scalar(1) + x.cwiseAbs().maxCoeff() + grad.cwiseAbs().maxCoeff() / curvature;
    const bool pinned = static_cast<Eigen::Index>(ws.size()) >= qp.dim() &&
                        Eigen::ColPivHouseholderQR<MatrixX<Scalar>>(detail::active_rows(qp, ws)).rank() == qp.dim();
    if (pinned || step.delta.cwiseAbs().maxCoeff() <= Scalar(1e-12) * step_scale) {
      Eigen::Index p = -1;
      Scalar lowest = std::numeric_limits<Scalar>::infinity();
      for (std::size_t r = 0; r < ws.size(); ++r) {
        const Scalar l = step.multipliers(static_cast<Eigen::Index>(r));
        if (l < lowest || (l == lowest && ws.indices()[r] < ws.indices()[static_cast<std::size_t>(p)])) {
          lowest = l;
          p = static_cast<Eigen::Index>(r);
        }
      }
      if (ws.empty() || lowest >= -lambda_tol) {
        sol.delta_u = x;
        sol.multipliers = step.multipliers;
        sol.working_set = ws;
        sol.status = QPStatus::optimal;
        return sol;
      }
      WorkingSet next = ws;
      next.remove(ws.indices()[static_cast<std::size_t>(p)]);
      ws = next;
      enter(ws);
    } else {
      const StepLength<Scalar> sl = step_length(qp, ws, x, step.delta);
      if (sl.blocking && sl.kappa < Scalar(1)) {
        if (sl.kappa > Scalar(0)) seen_here.clear();
        x += sl.kappa * step.delta;
        WorkingSet next = ws;
        next.add(*sl.blocking);
        ws = next;
        enter(ws);
      } else {
        x += step.delta;
        seen_here.clear();
        seen_here.insert(ws.sorted());
      }
    }
    if (trace) trace->push_back({x, problem.objective(x), ws.size()});
  }
  sol.delta_u = x;
  sol.working_set = ws;
  sol.multipliers = kkt_step(qp, ws, x, options.path).multipliers;
  sol.status = QPStatus::max_iterations;
  return sol;
}

}  // namespace gpmpc::qp
