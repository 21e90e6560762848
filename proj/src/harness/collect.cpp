#include "gpmpc/harness/collect.hpp"

#include "gpmpc/harness/baseline.hpp"

#include <random>

namespace gpmpc::harness {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SubsystemData make_subsystem_data(Eigen::MatrixXd states, Eigen::MatrixXd controls) {
  SubsystemData d;
  d.states = std::move(states);
  d.controls = std::move(controls);
  d.raw = gp::Dataset<double>::from_trajectory(d.states, d.controls);
  d.scaling = gp::ScalingTransform<double>::fit(d.raw.inputs);
  const Eigen::MatrixXd scaled_states = d.state_scaling().scale_rows(d.states);
  const Eigen::MatrixXd scaled_controls = d.control_scaling().scale_rows(d.controls);
  d.scaled = gp::Dataset<double>::from_trajectory(scaled_states, scaled_controls);
  d.scaled.scaling = d.scaling;
  return d;
}

CollectedData collect_data(const ExperimentConfig& cfg, int count, std::uint64_t seed) {
  cfg.validate();
  require(count >= 2, "collect_data: count must be at least 2");
  const Trajectory traj = cfg.trajectory.generate();
  require(traj.size() >= count + 1, "collect_data: trajectory shorter than the requested count");
  const sim::QuadrotorParams plant = cfg.plant_params();
  const double dt = cfg.dt();
  const auto& bounds = cfg.mpc;

  std::mt19937_64 plant_rng(derive_seed(seed, 0));
  std::mt19937_64 explore_rng(derive_seed(seed, 1));
  std::normal_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd xi(count + 1, 6), eta(count + 1, 6), u_xi(count, 3), u_eta(count, 3);
  sim::QuadrotorState s;
  xi.row(0) = s.translational.transpose();
  eta.row(0) = s.rotational.transpose();
  for (int k = 0; k < count; ++k) {
    const Eigen::Vector3d ff = (traj.velocity_at(k + 1) - traj.velocity_at(k)) / dt;
    Eigen::Vector3d ut = translational_baseline(s.translational, traj.state_reference(k), ff, plant, cfg.baseline, dt);
    ut += Eigen::Vector3d(cfg.noise.explore_thrust * unit(explore_rng), cfg.noise.explore_tilt * unit(explore_rng),
                          cfg.noise.explore_tilt * unit(explore_rng));
    ut = clamp(ut, bounds.u_translational_min, bounds.u_translational_max);
    const sim::Attitude att = attitude_targets(ut(1), ut(2));
    Eigen::Vector3d ur = rotational_baseline(s.rotational, att.phi, att.theta, plant, cfg.baseline, dt);
    for (int i = 0; i < 3; ++i) ur(i) += cfg.noise.explore_torque * unit(explore_rng);
    ur = clamp(ur, bounds.u_rotational_min, bounds.u_rotational_max);

    sim::ControlInputs u;
    u.U1 = ut(0);
    u.ux = ut(1);
    u.uy = ut(2);
    u.U2 = ur(0);
    u.U3 = ur(1);
    u.U4 = ur(2);
    try {
      s = sim::simulate_step(s, u, dt, plant, plant_rng);
    } catch (const SimulationBlowup& e) {
      throw CollectionAborted(std::string("collect_data: ") + e.what(), static_cast<std::size_t>(k));
    }
    u_xi.row(k) = ut.transpose();
    u_eta.row(k) = ur.transpose();
    xi.row(k + 1) = s.translational.transpose();
    eta.row(k + 1) = s.rotational.transpose();
  }

  CollectedData out;
  out.trajectory = traj;
  out.translational = make_subsystem_data(std::move(xi), std::move(u_xi));
  out.rotational = make_subsystem_data(std::move(eta), std::move(u_eta));
  return out;
}

}  // namespace gpmpc::harness
