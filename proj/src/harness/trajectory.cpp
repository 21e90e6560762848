#include "gpmpc/harness/trajectory.hpp"

#include <cmath>

namespace gpmpc::harness {

std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::elliptical: return "elliptical";
    case TrajectoryKind::lorenz: return "lorenz";
    case TrajectoryKind::hover: return "hover";
  }
  return "?";
}

TrajectoryKind parse_trajectory_kind(const std::string& s) {
  if (s == "elliptical") return TrajectoryKind::elliptical;
  if (s == "lorenz") return TrajectoryKind::lorenz;
  if (s == "hover") return TrajectoryKind::hover;
  throw ContractViolation("unknown trajectory kind '" + s + "'");
}

Eigen::Matrix<double, 6, 1> Trajectory::state_reference(Eigen::Index k) const {
  const Eigen::Vector3d p = position_at(k), v = velocity_at(k);
  Eigen::Matrix<double, 6, 1> r;
  r << p(0), v(0), p(1), v(1), p(2), v(2);
  return r;
}

namespace {

Eigen::Index sample_count(double duration, double rate) {
  require(duration > 0 && rate > 0 && std::isfinite(duration * rate), "trajectory: duration and rate must be positive");
  const auto n = static_cast<Eigen::Index>(std::llround(duration * rate)) + 1;
  require(n >= 2, "trajectory: duration * rate must give at least two samples");
  return n;
}

}  // namespace

Trajectory generate_elliptical(double duration, double rate, const EllipticalParams& p) {
  require(p.a > 0 && p.b > 0 && p.omega > 0, "elliptical: radii and omega must be positive");
  const Eigen::Index n = sample_count(duration, rate);
  Trajectory tr;
  tr.kind = TrajectoryKind::elliptical;
  tr.rate = rate;
  tr.position.resize(n, 3);
  tr.velocity.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double c = std::cos(p.omega * t), s = std::sin(p.omega * t);
    tr.t.push_back(t);
    tr.position.row(i) << p.a * c, p.b * s, p.c + p.d * t;
    tr.velocity.row(i) << -p.a * p.omega * s, p.b * p.omega * c, p.d;
  }
  tr.characteristic_radius = std::min(p.a, p.b);
  return tr;
}

Eigen::Vector3d lorenz_derivative(const Eigen::Vector3d& l, const LorenzParams& p) {
  return {p.sigma * (l(1) - l(0)), l(0) * (p.rho - l(2)) - l(1), l(0) * l(1) - p.beta * l(2)};
}

Eigen::Vector3d lorenz_rk4(const Eigen::Vector3d& l0, double h, int substeps, const LorenzParams& p) {
  require(substeps >= 1, "lorenz_rk4: substeps must be positive");
  Eigen::Vector3d l = l0;
  const double dt = h / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Eigen::Vector3d k1 = lorenz_derivative(l, p);
    const Eigen::Vector3d k2 = lorenz_derivative(l + 0.5 * dt * k1, p);
    const Eigen::Vector3d k3 = lorenz_derivative(l + 0.5 * dt * k2, p);
    const Eigen::Vector3d k4 = lorenz_derivative(l + dt * k3, p);
    l += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return l;
}

Trajectory generate_lorenz(double duration, double rate, const LorenzParams& p) {
  require(p.time_scale > 0, "lorenz: time_scale must be positive");
  require((p.box_max.array() > p.box_min.array()).all(), "lorenz: box_max must exceed box_min");
  const Eigen::Index n = sample_count(duration, rate);
  Eigen::MatrixX3d raw(n, 3), rate_raw(n, 3);
  Eigen::Vector3d l = p.initial;
  const double h = p.time_scale / rate;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) l = lorenz_rk4(l, h, p.substeps, p);
    raw.row(i) = l.transpose();
    rate_raw.row(i) = lorenz_derivative(l, p).transpose() * p.time_scale;
  }
  const Eigen::RowVector3d lo = raw.colwise().minCoeff(), hi = raw.colwise().maxCoeff();
  Eigen::RowVector3d gain = (p.box_max - p.box_min).transpose().array() / (hi - lo).array();
  for (int c = 0; c < 3; ++c)
    if (!(hi(c) > lo(c))) gain(c) = 1.0;

  Trajectory tr;
  tr.kind = TrajectoryKind::lorenz;
  tr.rate = rate;
  tr.position.resize(n, 3);
  tr.velocity.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    tr.t.push_back(static_cast<double>(i) / rate);
    tr.position.row(i) = p.box_min.transpose().array() + gain.array() * (raw.row(i) - lo).array();
    tr.velocity.row(i) = gain.array() * rate_raw.row(i).array();
  }
  tr.characteristic_radius = 0.5 * (p.box_max - p.box_min).minCoeff();
  return tr;
}

Trajectory generate_hover(double duration, double rate, const HoverParams& p) {
  const Eigen::Index n = sample_count(duration, rate);
  Trajectory tr;
  tr.kind = TrajectoryKind::hover;
  tr.rate = rate;
  tr.position = p.point.transpose().replicate(n, 1);
  tr.velocity = Eigen::MatrixX3d::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) tr.t.push_back(static_cast<double>(i) / rate);
  tr.characteristic_radius = std::max(p.point.norm(), 1.0);
  return tr;
}

}  // namespace gpmpc::harness
