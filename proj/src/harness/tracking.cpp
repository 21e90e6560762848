#include "gpmpc/harness/tracking.hpp"

#include "gpmpc/gp/train.hpp"
#include "gpmpc/harness/baseline.hpp"
#include "gpmpc/mpc/controller.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace gpmpc::harness {

namespace {

SubsystemModel train_subsystem(const SubsystemData& d, const ExperimentConfig& cfg, std::uint64_t seed) {
  gp::TrainResult r = gp::train(d.scaled, cfg.gp.train_options(seed));
  return SubsystemModel{std::move(r.gp), d.state_scaling(), d.control_scaling(), r.warning};
}

// Unscaled input, with bounds hit in scaled space mapped exactly onto the raw
// bounds (the affine round trip is only exact to a few ulps).
Eigen::Vector3d to_raw(const Eigen::VectorXd& scaled, const mpc::MPCConfig<double>& mc,
                       const gp::ScalingTransform<double>& t, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  Eigen::Vector3d u = t.unscale(scaled);
  for (int i = 0; i < 3; ++i) {
    const double tol_hi = 1e-9 * std::max(1.0, std::abs(hi(i)));
    const double tol_lo = 1e-9 * std::max(1.0, std::abs(lo(i)));
    if (scaled(i) == mc.u_max(i) || (u(i) > hi(i) && u(i) <= hi(i) + tol_hi)) u(i) = hi(i);
    if (scaled(i) == mc.u_min(i) || (u(i) < lo(i) && u(i) >= lo(i) - tol_lo)) u(i) = lo(i);
  }
  return u;
}

int count_violations(const Eigen::Vector3d& u, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  return static_cast<int>(((u.array() < lo.array()) || (u.array() > hi.array())).count());
}

struct LoopController {
  const SubsystemModel& model;
  mpc::MPCConfig<double> config;
  mpc::ControllerState<double> state;

  LoopController(const SubsystemModel& m, mpc::MPCConfig<double> c, const Eigen::Vector3d& u0_raw)
      : model(m), config(std::move(c)),
        state(mpc::ControllerState<double>::initial(
            Eigen::VectorXd(model.control_scaling.scale(u0_raw)).cwiseMax(config.u_min).cwiseMin(config.u_max), 6)) {}

  struct Outcome {
    Eigen::VectorXd control;  // scaled
    int iterations = 0;
    double cost = 0;
    bool failsafe = false;
    int rows_relaxed = 0;
    std::string error;
  };

  Outcome step(const Vector6& measurement_raw, const std::vector<Vector6>& refs_raw) {
    std::vector<Eigen::VectorXd> refs;
    for (const auto& r : refs_raw) refs.emplace_back(model.state_scaling.scale(r));
    Outcome out;
    try {
      const auto res = mpc::mpc_step(state, model.gp, Eigen::VectorXd(model.state_scaling.scale(measurement_raw)), refs,
                                     config);
      state = res.state;
      out.control = res.control;
      out.iterations = res.diagnostics.qp_iterations;
      out.cost = res.diagnostics.cost;
      out.failsafe = res.diagnostics.linearization_failed;
      out.rows_relaxed = res.diagnostics.rows_relaxed;
      if (out.failsafe) out.error = "linearization failed";
    } catch (const Error& e) {
      // hold the previous input and drop the warm start
      out.control = state.previous_control;
      state.previous_solution.reset();
      out.failsafe = true;
      out.error = e.what();
    }
    return out;
  }
};

}  // namespace

Models train_models(const CollectedData& data, const ExperimentConfig& cfg, std::uint64_t seed) {
  return Models{train_subsystem(data.translational, cfg, derive_seed(seed, 2)),
                train_subsystem(data.rotational, cfg, derive_seed(seed, 3))};
}

mpc::MPCConfig<double> scaled_mpc_config(const ExperimentConfig& cfg, const SubsystemModel& model,
                                         bool translational) {
  const MPCSettings& s = cfg.mpc;
  mpc::MPCConfig<double> c;
  c.horizon = s.horizon;
  const Eigen::VectorXd q = translational ? s.q_translational : s.q_rotational;
  const Eigen::VectorXd r = translational ? s.r_translational : s.r_rotational;
  c.Q = (q.array() / model.state_scaling.gain().array().square()).matrix().asDiagonal();
  c.R = (r.array() / model.control_scaling.gain().array().square()).matrix().asDiagonal();
  c.x_min = Eigen::VectorXd::Constant(6, -1e6);
  c.x_max = Eigen::VectorXd::Constant(6, 1e6);
  c.u_min = model.control_scaling.scale(translational ? s.u_translational_min : s.u_rotational_min);
  c.u_max = model.control_scaling.scale(translational ? s.u_translational_max : s.u_rotational_max);
  c.tighten = s.tighten;
  c.warm_start = s.warm_start;
  c.qp_max_iterations = s.qp_max_iterations;
  c.validate();
  return c;
}

TrackingResult run_closed_loop(const ExperimentConfig& cfg, const Models& models, const Trajectory& traj,
                               std::uint64_t seed) {
  cfg.validate();
  const MPCSettings& ms = cfg.mpc;
  const sim::QuadrotorParams plant = cfg.plant_params();
  const double dt = cfg.dt();
  const int steps = static_cast<int>(traj.size()) - 1;
  const int h = ms.horizon;

  const Eigen::Vector3d u0(ms.start_at_hover ? plant.mass * plant.gravity : 0.0, 0.0, 0.0);
  LoopController outer(models.translational, scaled_mpc_config(cfg, models.translational, true),
                       clamp(u0, ms.u_translational_min, ms.u_translational_max));
  LoopController inner(models.rotational, scaled_mpc_config(cfg, models.rotational, false),
                       clamp(Eigen::Vector3d::Zero(), ms.u_rotational_min, ms.u_rotational_max));

  std::mt19937_64 rng(derive_seed(seed, 4));
  sim::QuadrotorState s;
  TrackingResult out;
  for (int k = 0; k < steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = k;

    std::vector<Vector6> refs;
    for (int j = 1; j <= h; ++j) refs.push_back(traj.state_reference(k + j));
    const auto o = outer.step(s.translational, refs);
    rec.u_translational = to_raw(o.control, outer.config, models.translational.control_scaling,
                                 ms.u_translational_min, ms.u_translational_max);

    const sim::Attitude att = attitude_targets(rec.u_translational(1), rec.u_translational(2));
    Vector6 att_ref;
    att_ref << att.phi, 0, att.theta, 0, 0, 0;
    const auto i = inner.step(s.rotational, std::vector<Vector6>(static_cast<std::size_t>(h), att_ref));
    rec.u_rotational = to_raw(i.control, inner.config, models.rotational.control_scaling, ms.u_rotational_min,
                              ms.u_rotational_max);

    sim::ControlInputs u;
    u.U1 = rec.u_translational(0);
    u.ux = rec.u_translational(1);
    u.uy = rec.u_translational(2);
    u.U2 = rec.u_rotational(0);
    u.U3 = rec.u_rotational(1);
    u.U4 = rec.u_rotational(2);
    s = sim::simulate_step(s, u, dt, plant, rng);

    rec.t = traj.t[static_cast<std::size_t>(k + 1)];
    rec.position = s.position();
    rec.reference = traj.position_at(k + 1);
    rec.angles = s.angles();
    rec.phi_d = att.phi;
    rec.theta_d = att.theta;
    rec.qp_iterations_translational = o.iterations;
    rec.qp_iterations_rotational = i.iterations;
    rec.cost_translational = o.cost;
    rec.cost_rotational = i.cost;
    rec.failsafe_translational = o.failsafe;
    rec.failsafe_rotational = i.failsafe;
    rec.rows_relaxed = o.rows_relaxed + i.rows_relaxed;
    if (out.metrics.first_failure.empty() && (o.failsafe || i.failsafe))
      out.metrics.first_failure = "step " + std::to_string(k) + ": " + (o.failsafe ? o.error : i.error);
    out.steps.push_back(rec);
    out.wall_time.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  const std::string first_failure = out.metrics.first_failure;
  out.metrics = compute_metrics(out.steps, cfg, models, traj.characteristic_radius);
  out.metrics.first_failure = first_failure;
  return out;
}

TrackingMetrics compute_metrics(const std::vector<StepRecord>& steps, const ExperimentConfig& cfg,
                                const Models& models, double characteristic_radius) {
  TrackingMetrics m;
  m.characteristic_radius = characteristic_radius;
  if (steps.empty()) return m;
  const auto n = static_cast<double>(steps.size());
  const std::size_t quarter_start = steps.size() - std::max<std::size_t>(1, steps.size() / 4);
  double sq = 0, sq_final = 0;
  const auto rot = models.rotational.state_scaling;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StepRecord& r = steps[k];
    const Eigen::Vector3d e = r.position - r.reference;
    m.rmse_axis += e.cwiseAbs2();
    sq += e.squaredNorm();
    if (k >= quarter_start) sq_final += e.squaredNorm();
    // attitude error in the rotational scaled space: angle columns 0, 2, 4
    const double target[3] = {r.phi_d, r.theta_d, 0.0};
    for (int a = 0; a < 3; ++a) {
      const double d = rot.gain()(2 * a) * sim::wrap_angle(r.angles(a) - target[a]);
      m.attitude_rmse_scaled(a) += d * d;
    }
    m.violations_translational +=
        count_violations(r.u_translational, cfg.mpc.u_translational_min, cfg.mpc.u_translational_max);
    m.violations_rotational += count_violations(r.u_rotational, cfg.mpc.u_rotational_min, cfg.mpc.u_rotational_max);
    m.failsafe_steps += (r.failsafe_translational || r.failsafe_rotational) ? 1 : 0;
    m.mean_qp_iterations_translational += r.qp_iterations_translational;
    m.mean_qp_iterations_rotational += r.qp_iterations_rotational;
  }
  m.rmse_axis = (m.rmse_axis / n).cwiseSqrt();
  m.attitude_rmse_scaled = (m.attitude_rmse_scaled / n).cwiseSqrt();
  m.rmse = std::sqrt(sq / n);
  m.final_quarter_rmse = std::sqrt(sq_final / static_cast<double>(steps.size() - quarter_start));
  m.relative_final_quarter = m.final_quarter_rmse / characteristic_radius;
  m.mean_qp_iterations_translational /= n;
  m.mean_qp_iterations_rotational /= n;
  m.failed = static_cast<double>(m.failsafe_steps) > cfg.mpc.failsafe_fraction * n;
  return m;
}

}  // namespace gpmpc::harness
