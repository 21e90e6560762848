#include "gpmpc/mpc/controller.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace gpmpc::mpc {
namespace {

using testing::Mat;
using testing::Vec;

MPCConfig<double> make_config(Eigen::Index n, Eigen::Index m, int h, double lo = -1e6, double hi = 1e6) {
  MPCConfig<double> cfg;
  cfg.horizon = h;
  cfg.Q = Mat::Identity(n, n);
  cfg.R = 0.1 * Mat::Identity(m, m);
  cfg.x_min = Vec::Constant(n, -1e6);
  cfg.x_max = Vec::Constant(n, 1e6);
  cfg.u_min = Vec::Constant(m, lo);
  cfg.u_max = Vec::Constant(m, hi);
  return cfg;
}

// Scalar plant x' = x + 0.1 u - 0.05 x sampled on a grid.
gp::TrainedGP<double> scalar_gp(double sf2 = 1.0, double control_length = 1.0) {
  const int side = 9;
  Mat x(side * side, 2);
  Mat y(side * side, 1);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const double xs = -2.0 + 4.0 * i / (side - 1), us = -2.0 + 4.0 * j / (side - 1);
      x.row(i * side + j) << xs, us;
      y(i * side + j, 0) = 0.1 * us - 0.05 * xs;
    }
  Vec ell(2);
  ell << 1.5, control_length;
  return gp::TrainedGP<double>(gp::Dataset<double>(x, y), {gp::Hyperparameters<double>(ell, sf2, 1e-6)});
}

std::vector<Vec> constant_refs(const Vec& r, int h) { return std::vector<Vec>(static_cast<std::size_t>(h), r); }

TEST(ExpectedCost, ZeroCovarianceIsDeterministicCost) {
  const auto cfg = make_config(2, 1, 1);
  Vec mu(2), r(2);
  mu << 1.0, -1.0;
  r << 0.5, 0.5;
  const Vec u = Vec::Constant(1, 2.0);
  EXPECT_DOUBLE_EQ(expected_cost(mu, Mat(Mat::Zero(2, 2)), u, r, cfg), 0.25 + 2.25 + 0.4);
}

TEST(ExpectedCost, TraceTermExample) {
  auto cfg = make_config(2, 1, 1);
  Mat sigma = Mat::Zero(2, 2);
  sigma.diagonal() << 1.0, 2.0;
  const Vec r = Vec::Zero(2);
  EXPECT_DOUBLE_EQ(expected_cost(r, sigma, Vec(Vec::Zero(1)), r, cfg), 3.0);
}

TEST(ExpectedCost, MatchesMonteCarloQuadraticForm) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    auto cfg = make_config(n, 2, 1);
    cfg.Q = testing::random_psd(rng, n);
    cfg.R = testing::random_spd(rng, 2);
    const Vec mu = testing::random_vector(rng, n), r = testing::random_vector(rng, n), u = testing::random_vector(rng, 2);
    const Mat sigma = testing::random_psd(rng, n, 0.5);
    Eigen::SelfAdjointEigenSolver<Mat> eig(sigma);
    const Mat root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const int samples = 200000;
    double sum = 0, sum2 = 0;
    const double ur = u.dot(cfg.R * u);
    for (int s = 0; s < samples; ++s) {
      Vec zz(n);
      for (Eigen::Index i = 0; i < n; ++i) zz(i) = z(rng);
      const Vec e = mu + root * zz - r;
      const double v = e.dot(cfg.Q * e) + ur;
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
    EXPECT_LE(std::abs(expected_cost(mu, sigma, u, r, cfg) - mean), 4 * se + 1e-12) << "trial " << trial;
  }
}

TEST(TightenBounds, ZeroCovarianceLeavesBoundsUnchanged) {
  const Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
  const auto t = tighten_bounds(lo, hi, Mat(Mat::Zero(2, 2)));
  EXPECT_EQ(t.lower, lo);
  EXPECT_EQ(t.upper, hi);
}

TEST(TightenBounds, TwoSigmaShift) {
  const auto t = tighten_bounds(Vec(Vec::Constant(1, -5.0)), Vec(Vec::Constant(1, 1.0)), Mat(Mat::Constant(1, 1, 0.25)));
  EXPECT_DOUBLE_EQ(t.upper(0), 0.0);
  EXPECT_DOUBLE_EQ(t.lower(0), -4.0);
}

TEST(TightenBounds, CrossingBoundsThrow) {
  try {
    tighten_bounds(Vec(Vec::Constant(1, 0.0)), Vec(Vec::Constant(1, 1.0)), Mat(Mat::Constant(1, 1, 0.09)));
    FAIL() << "expected InfeasibleTightening";
  } catch (const InfeasibleTightening& e) {
    EXPECT_EQ(e.coordinate, 0);
  }
}

lin::LocalModel<double> random_local_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  const Eigen::Index ns = n + n * n;
  lin::LocalModel<double> model;
  model.A = 0.3 * testing::random_matrix(rng, ns, ns);
  model.B = testing::random_matrix(rng, ns, m);
  Vec s = Vec::Zero(ns);
  s.head(n) = testing::random_vector(rng, n);
  model.state = lin::ExtendedState<double>(s, n);
  model.control = testing::random_vector(rng, m);
  model.value = testing::random_vector(rng, ns);
  return model;
}

TEST(BuildCondensed, ZeroInputJacobianLeavesOnlyInputWeights) {
  std::mt19937_64 rng(11);
  auto model = random_local_model(rng, 2, 2);
  model.B.setZero();
  const auto cfg = make_config(2, 2, 3);
  const auto c = build_condensed(model, model.state, model.control, constant_refs(Vec(Vec::Ones(2)), 3), cfg);
  const Mat expected = c.mats.Tu.transpose() * c.mats.Rt * c.mats.Tu;
  EXPECT_EQ(c.qp.phi(), expected);
}

TEST(BuildCondensed, SingleStepDimensions) {
  std::mt19937_64 rng(12);
  const Eigen::Index n = 3, m = 2;
  const auto model = random_local_model(rng, n, m);
  const auto cfg = make_config(n, m, 1);
  const auto c = build_condensed(model, model.state, model.control, constant_refs(Vec(Vec::Zero(n)), 1), cfg);
  EXPECT_EQ(c.qp.dim(), m);
  EXPECT_EQ(c.qp.rows(), 2 * (m + n + n * n));
  EXPECT_EQ(c.mats.Mz.rows(), n);
  EXPECT_EQ(c.mats.Mz.cols(), n + n * n);
}

TEST(BuildCondensed, StructureOfStackedMatrices) {
  std::mt19937_64 rng(13);
  const Eigen::Index n = 2, m = 1, ns = 6;
  const int h = 4;
  const auto model = random_local_model(rng, n, m);
  auto cfg = make_config(n, m, h);
  cfg.Q << 2.0, 0.0, 0.0, 3.0;
  const auto c = build_condensed(model, model.state, model.control, constant_refs(Vec(Vec::Ones(n)), h), cfg);
  for (const Mat* t : {&c.mats.Tu, &c.mats.Tz}) {
    EXPECT_TRUE(t->isApprox(Mat(t->triangularView<Eigen::Lower>())));
    EXPECT_TRUE((t->diagonal().array() == 1.0).all());
  }
  Vec block_diag(ns);
  block_diag << 2.0, 3.0, 2.0, 0.0, 0.0, 3.0;
  for (int j = 0; j < h; ++j) {
    EXPECT_EQ(Mat(c.mats.Qt.block(j * ns, j * ns, ns, ns)), Mat(block_diag.asDiagonal()));
    EXPECT_EQ(c.mats.r_star.segment(j * ns, n), Vec::Ones(n));
    EXPECT_TRUE(c.mats.r_star.segment(j * ns + n, n * n).isZero(0));
  }
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(c.qp.phi()).eigenvalues().minCoeff(), 0.0);
}

TEST(BuildCondensed, PredictionMatchesExplicitRollout) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2, m = 2;
    const int h = 3;
    const auto model = random_local_model(rng, n, m);
    // Current state and previous control differ from the linearization point.
    Vec sk = model.state.vec() + 0.1 * testing::random_vector(rng, model.state.size());
    const lin::ExtendedState<double> s_k(sk, n);
    const Vec u_prev = testing::random_vector(rng, m);
    const auto cfg = make_config(n, m, h);
    const auto c = build_condensed(model, s_k, u_prev, constant_refs(Vec(Vec::Zero(n)), h), cfg);
    const Vec du = testing::random_vector(rng, h * m);
    const Vec z = c.mats.predict(du);
    const Vec big_u = c.mats.controls(du);

    Vec s = s_k.vec();
    Vec u = u_prev;
    for (int j = 0; j < h; ++j) {
      u += du.segment(j * m, m);
      EXPECT_LE((big_u.segment(j * m, m) - u).cwiseAbs().maxCoeff(), 1e-12);
      s = model.value + model.A * (s - model.state.vec()) + model.B * (u - model.control);
      EXPECT_LE((z.segment(j * s.size(), s.size()) - s).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial << " step " << j;
    }
  }
}

TEST(BuildCondensed, CostMatchesStackedQuadratic) {
  std::mt19937_64 rng(15);
  const Eigen::Index n = 2, m = 1;
  const int h = 3;
  const auto model = random_local_model(rng, n, m);
  const auto cfg = make_config(n, m, h);
  std::vector<Vec> refs;
  for (int j = 0; j < h; ++j) refs.push_back(testing::random_vector(rng, n));
  const auto c = build_condensed(model, model.state, model.control, refs, cfg);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec du = testing::random_vector(rng, h * m);
    const Vec e = c.mats.predict(du) - c.mats.r_star;
    const Vec u = c.mats.controls(du);
    const double j = e.dot(c.mats.Qt * e) + u.dot(c.mats.Rt * u);
    EXPECT_NEAR(c.cost(du), j, 1e-9 * std::max(1.0, j));
  }
}

TEST(BuildCondensed, HeldControlStaysFeasibleUnderTightening) {
  std::mt19937_64 rng(16);
  const Eigen::Index n = 2, m = 1;
  const int h = 3;
  const auto model = random_local_model(rng, n, m);
  auto cfg = make_config(n, m, h, -1.0, 1.0);
  cfg.x_min = Vec::Constant(n, -0.5);
  cfg.x_max = Vec::Constant(n, 0.5);
  std::vector<Mat> cov;
  for (int j = 0; j < h; ++j) cov.push_back(Mat::Identity(n, n) * 0.01 * (j + 1) * (j + 1));
  const Vec u_prev = Vec::Constant(m, 0.2);
  const auto c = build_condensed(model, model.state, u_prev, constant_refs(Vec(Vec::Zero(n)), h), cfg, &cov);
  EXPECT_LE(c.qp.max_violation(Vec::Zero(h * m)), 0.0);
  // Step 3 has sd 0.3 and a gap of 1.0, so the tightened bounds cross.
  EXPECT_EQ(c.tightening(2, 0), static_cast<int>(RowTightening::dropped));
  EXPECT_EQ(c.tightening(2, 1), static_cast<int>(RowTightening::dropped));
}

TEST(MpcStep, StationaryReferenceGivesZeroControl) {
  std::mt19937_64 rng(3);
  const Mat x = testing::random_matrix(rng, 20, 2);
  Vec ell(2);
  ell << 1.0, 1e6;
  const gp::TrainedGP<double> gp(gp::Dataset<double>(x, Mat::Zero(20, 1)), {gp::Hyperparameters<double>(ell, 1e-6, 1e-8)});
  const auto cfg = make_config(1, 1, 3);
  const Vec meas = Vec::Constant(1, 0.3);
  const auto ctrl = ControllerState<double>::initial(Vec::Zero(1), 1);
  const auto res = mpc_step(ctrl, gp, meas, constant_refs(meas, 3), cfg);
  EXPECT_LE(std::abs(res.control(0)), 1e-12);
  EXPECT_EQ(res.diagnostics.qp_status, qp::QPStatus::optimal);
}

TEST(MpcStep, SaturatesAtUpperInputBound) {
  const auto gp = scalar_gp();
  auto cfg = make_config(1, 1, 1, 0.0, 100.0);
  cfg.R = Mat::Constant(1, 1, 1e-6);
  const Vec meas = Vec::Constant(1, 0.0);
  const Vec ref = Vec::Constant(1, 1000.0);
  const auto ctrl = ControllerState<double>::initial(Vec::Constant(1, 1.0), 1);
  const auto res = mpc_step(ctrl, gp, meas, constant_refs(ref, 1), cfg);

  // The unconstrained minimizer of the same QP lies above the bound.
  const auto s_k = lin::extend(gp::GaussianState<double>(meas));
  const auto model = lin::linearize(gp, s_k, ctrl.previous_control);
  std::vector<Mat> cov{gp::propagate(gp, gp::GaussianState<double>(meas), ctrl.previous_control).cov()};
  const auto c = build_condensed(model, s_k, ctrl.previous_control, constant_refs(ref, 1), cfg, &cov);
  const double free_opt = ctrl.previous_control(0) - c.qp.psi()(0) / c.qp.phi()(0, 0);
  EXPECT_GT(free_opt, 100.0);
  EXPECT_EQ(res.control(0), 100.0);
}

TEST(MpcStep, SingleStepMatchesGridSearchOnLinearizedObjective) {
  const auto gp = scalar_gp(0.5);
  auto cfg = make_config(1, 1, 1);
  cfg.R = Mat::Constant(1, 1, 0.05);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec meas = testing::random_vector(rng, 1, -1, 1);
    const Vec ref = testing::random_vector(rng, 1, -1, 1);
    const Vec u_prev = testing::random_vector(rng, 1, -0.5, 0.5);
    ControllerState<double> ctrl = ControllerState<double>::initial(u_prev, 1);
    const auto res = mpc_step(ctrl, gp, meas, constant_refs(ref, 1), cfg);

    const auto s_k = lin::extend(gp::GaussianState<double>(meas));
    const auto model = lin::linearize(gp, s_k, u_prev);
    double best_u = 0, best = std::numeric_limits<double>::infinity();
    for (double u = -6.0; u <= 6.0; u += 1e-3) {
      const Vec s1 = model.value + model.B * (u - u_prev(0));
      const double cost = expected_cost(Vec(s1.head(1)), Mat(Mat::Constant(1, 1, s1(1) * s1(1))), Vec(Vec::Constant(1, u)), ref, cfg);
      if (cost < best) {
        best = cost;
        best_u = u;
      }
    }
    EXPECT_NEAR(res.control(0), best_u, 2e-3) << "trial " << trial;
  }
}

TEST(MpcStep, WarmAndColdSolvesAgree) {
  const auto gp = scalar_gp();
  auto cfg = make_config(1, 1, 4, -1.0, 1.0);
  cfg.R = Mat::Constant(1, 1, 1e-3);
  auto warm_cfg = cfg;
  auto cold_cfg = cfg;
  cold_cfg.warm_start = false;
  ControllerState<double> ctrl = ControllerState<double>::initial(Vec::Zero(1), 1);
  Vec x = Vec::Constant(1, -1.0);
  for (int k = 0; k < 15; ++k) {
    const auto refs = constant_refs(Vec(Vec::Constant(1, 1.5)), 4);
    const auto warm = mpc_step(ctrl, gp, x, refs, warm_cfg);
    const auto cold = mpc_step(ctrl, gp, x, refs, cold_cfg);
    EXPECT_NEAR(warm.diagnostics.cost, cold.diagnostics.cost, 1e-7 * std::max(1.0, cold.diagnostics.cost));
    EXPECT_NEAR(warm.control(0), cold.control(0), 1e-6);
    x(0) += 0.1 * warm.control(0) - 0.05 * x(0);
    ctrl = warm.state;
  }
}

TEST(MpcStep, InfeasibleWarmPointRestartsCold) {
  const auto gp = scalar_gp();
  auto cfg = make_config(1, 1, 4, -1.0, 1.0);
  auto cold_cfg = cfg;
  cold_cfg.warm_start = false;
  ControllerState<double> ctrl = ControllerState<double>::initial(Vec::Zero(1), 1);
  const Vec x = Vec::Constant(1, -1.0);
  const auto refs = constant_refs(Vec(Vec::Constant(1, 1.5)), 4);
  ctrl = mpc_step(ctrl, gp, x, refs, cfg).state;
  ASSERT_TRUE(ctrl.previous_solution.has_value());
  ctrl.previous_solution->delta_u.setConstant(5.0);  // far outside the input bounds
  const auto warm = mpc_step(ctrl, gp, x, refs, cfg);
  const auto cold = mpc_step(ctrl, gp, x, refs, cold_cfg);
  EXPECT_FALSE(warm.diagnostics.warm_started);
  EXPECT_EQ(warm.diagnostics.qp_iterations, cold.diagnostics.qp_iterations);
  EXPECT_EQ(warm.control, cold.control);
}

TEST(MpcStep, ControlsStayWithinBoundsInClosedLoop) {
  const auto gp = scalar_gp();
  auto cfg = make_config(1, 1, 5, -0.7, 0.9);
  cfg.R = Mat::Constant(1, 1, 1e-4);
  ControllerState<double> ctrl = ControllerState<double>::initial(Vec::Zero(1), 1);
  Vec x = Vec::Constant(1, 0.0);
  std::mt19937_64 rng(18);
  for (int k = 0; k < 60; ++k) {
    const double r = 1.8 * std::sin(0.2 * k);
    const auto res = mpc_step(ctrl, gp, x, constant_refs(Vec(Vec::Constant(1, r)), 5), cfg);
    EXPECT_GE(res.control(0), cfg.u_min(0));
    EXPECT_LE(res.control(0), cfg.u_max(0));
    x(0) += 0.1 * res.control(0) - 0.05 * x(0);
    ctrl = res.state;
  }
}

// Exact linear plant handed to the condensed builder as its own local model.
TEST(LinearMpc, ConvergesToConstantReference) {
  const Eigen::Index n = 2, m = 2, ns = 6;
  Mat a(2, 2), b(2, 2);
  a << 0.9, 0.1, 0.0, 0.8;
  b << 0.5, 0.0, 0.1, 0.5;
  auto cfg = make_config(n, m, 5, -5.0, 5.0);
  cfg.R = 1e-4 * Mat::Identity(m, m);
  Vec r(2);
  r << 1.0, -1.0;
  Vec x = Vec::Zero(2), u = Vec::Zero(2);
  std::optional<qp::QPSolution<double>> prev;
  double last = (x - r).norm();
  for (int k = 0; k < 20; ++k) {
    lin::LocalModel<double> model;
    model.A = Mat::Zero(ns, ns);
    model.A.topLeftCorner(2, 2) = a;
    model.B = Mat::Zero(ns, m);
    model.B.topRows(2) = b;
    Vec s = Vec::Zero(ns);
    s.head(2) = x;
    model.state = lin::ExtendedState<double>(s, n);
    model.control = u;
    model.value = Vec::Zero(ns);
    model.value.head(2) = a * x + b * u;
    const auto c = build_condensed(model, model.state, u, constant_refs(r, 5), cfg);
    const auto sol = qp::solve(c.qp, Vec(Vec::Zero(c.qp.dim())));
    ASSERT_EQ(sol.status, qp::QPStatus::optimal);
    u += sol.delta_u.head(m);
    x = a * x + b * u;
    const double err = (x - r).norm();
    EXPECT_LE(err, last + 1e-9) << "step " << k;
    last = err;
  }
  EXPECT_LE(last, 1e-2);
}

}  // namespace
}  // namespace gpmpc::mpc
