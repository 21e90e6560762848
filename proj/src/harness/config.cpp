#include "gpmpc/harness/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace gpmpc::harness {

namespace pt = boost::property_tree;

Trajectory TrajectorySettings::generate() const {
  switch (kind) {
    case TrajectoryKind::elliptical: return generate_elliptical(duration, rate, ellipse);
    case TrajectoryKind::lorenz: return generate_lorenz(duration, rate, lorenz);
    case TrajectoryKind::hover: return generate_hover(duration, rate, hover);
  }
  throw ContractViolation("unknown trajectory kind");
}

gp::TrainOptions GPSettings::train_options(std::uint64_t seed) const {
  gp::TrainOptions o;
  o.restarts = restarts;
  o.max_iterations = max_iterations;
  o.gradient_tolerance = gradient_tolerance;
  o.noise_floor = noise_floor;
  o.seed = seed;
  return o;
}

sim::QuadrotorParams ExperimentConfig::plant_params() const {
  sim::QuadrotorParams p = plant;
  p.translational_noise = noise.translational;
  p.rotational_noise = noise.rotational;
  return p;
}

void ExperimentConfig::validate() const {
  plant_params().validate();
  require(trajectory.rate > 0 && trajectory.duration > 0, "config: trajectory duration and rate must be positive");
  require(gp.observations >= 2, "config: gp.observations must be at least 2");
  require(static_cast<double>(gp.observations) <= trajectory.duration * trajectory.rate + 0.5,
          "config: trajectory too short for gp.observations");
  for (int s : gp.sizes) require(s >= 1 && s <= gp.observations, "config: gp.sizes must lie in [1, observations]");
  require(gp.restarts >= 1 && gp.max_iterations >= 1, "config: gp.restarts and gp.max_iterations must be positive");
  require(mpc.horizon >= 1, "config: mpc.horizon must be at least 1");
  require((mpc.u_translational_min.array() <= mpc.u_translational_max.array()).all() &&
              (mpc.u_rotational_min.array() <= mpc.u_rotational_max.array()).all(),
          "config: input lower bounds must not exceed upper bounds");
  require((mpc.q_translational.array() >= 0).all() && (mpc.q_rotational.array() >= 0).all(),
          "config: Q weights must be nonnegative");
  require((mpc.r_translational.array() > 0).all() && (mpc.r_rotational.array() > 0).all(),
          "config: R weights must be positive");
  require(mpc.failsafe_fraction >= 0 && mpc.failsafe_fraction <= 1, "config: failsafe_fraction must lie in [0, 1]");
  require(noise.explore_thrust >= 0 && noise.explore_tilt >= 0 && noise.explore_torque >= 0,
          "config: exploration noise must be nonnegative");
}

std::vector<std::string> preset_names() { return {"default", "elliptical-paper", "lorenz", "lorenz-paper", "paper-noise"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "default" || name == "elliptical-paper") return c;
  if (name == "paper-noise") {
    c.noise.translational = 1.0;
    c.noise.rotational = 1.0;
    return c;
  }
  if (name == "lorenz" || name == "lorenz-paper") {
    c.trajectory.kind = TrajectoryKind::lorenz;
    if (name == "lorenz") {
      c.mpc.u_translational_max(0) = 45.0;
    } else {
      // verbatim; this thrust range cannot hold altitude
      c.mpc.u_translational_min = {-45.0, -2.0, -2.0};
      c.mpc.u_translational_max = {0.0, 2.0, 2.0};
    }
    return c;
  }
  throw ContractViolation("unknown preset '" + name + "'");
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  const std::string t = boost::trim_copy(s);
  double v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc{} || r.ptr != t.data() + t.size()) throw ContractViolation("config: bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  const std::string t = boost::trim_copy(s);
  int v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc{} || r.ptr != t.data() + t.size()) throw ContractViolation("config: bad integer '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = boost::to_lower_copy(boost::trim_copy(s));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ContractViolation("config: bad boolean '" + s + "'");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(parse_double(p));
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> parse_vec(const std::string& s) {
  const std::vector<double> v = parse_list(s);
  Eigen::Matrix<double, N, 1> out;
  if (v.size() == 1) {
    out.setConstant(v[0]);
  } else {
    if (v.size() != N) throw ContractViolation("config: expected " + std::to_string(N) + " values in '" + s + "'");
    for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
  }
  return out;
}

template <typename V>
std::string fmt_vec(const V& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt_double(v(i));
  return out;
}

struct Binding {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define BIND_DOUBLE(field) \
  Binding{[](const ExperimentConfig& c) { return fmt_double(c.field); }, \
          [](ExperimentConfig& c, const std::string& s) { c.field = parse_double(s); }}
#define BIND_INT(field) \
  Binding{[](const ExperimentConfig& c) { return std::to_string(c.field); }, \
          [](ExperimentConfig& c, const std::string& s) { c.field = parse_int(s); }}
#define BIND_BOOL(field) \
  Binding{[](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }, \
          [](ExperimentConfig& c, const std::string& s) { c.field = parse_bool(s); }}
#define BIND_VEC(field, N) \
  Binding{[](const ExperimentConfig& c) { return fmt_vec(c.field); }, \
          [](ExperimentConfig& c, const std::string& s) { c.field = parse_vec<N>(s); }}

// Ordered so to_ini is stable.
const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binding>>>>& bindings() {
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binding>>>> table = {
      {"plant",
       {{"mass", BIND_DOUBLE(plant.mass)},
        {"arm_length", BIND_DOUBLE(plant.arm_length)},
        {"inertia", BIND_VEC(plant.inertia, 3)},
        {"gravity", BIND_DOUBLE(plant.gravity)},
        {"substeps", BIND_INT(plant.substeps)}}},
      {"noise",
       {{"translational", BIND_DOUBLE(noise.translational)},
        {"rotational", BIND_DOUBLE(noise.rotational)},
        {"explore_thrust", BIND_DOUBLE(noise.explore_thrust)},
        {"explore_tilt", BIND_DOUBLE(noise.explore_tilt)},
        {"explore_torque", BIND_DOUBLE(noise.explore_torque)}}},
      {"trajectory",
       {{"kind", Binding{[](const ExperimentConfig& c) { return to_string(c.trajectory.kind); },
                         [](ExperimentConfig& c, const std::string& s) {
                           c.trajectory.kind = parse_trajectory_kind(boost::trim_copy(s));
                         }}},
        {"duration", BIND_DOUBLE(trajectory.duration)},
        {"rate", BIND_DOUBLE(trajectory.rate)},
        {"ellipse_a", BIND_DOUBLE(trajectory.ellipse.a)},
        {"ellipse_b", BIND_DOUBLE(trajectory.ellipse.b)},
        {"ellipse_c", BIND_DOUBLE(trajectory.ellipse.c)},
        {"ellipse_d", BIND_DOUBLE(trajectory.ellipse.d)},
        {"ellipse_omega", BIND_DOUBLE(trajectory.ellipse.omega)},
        {"lorenz_sigma", BIND_DOUBLE(trajectory.lorenz.sigma)},
        {"lorenz_rho", BIND_DOUBLE(trajectory.lorenz.rho)},
        {"lorenz_beta", BIND_DOUBLE(trajectory.lorenz.beta)},
        {"lorenz_initial", BIND_VEC(trajectory.lorenz.initial, 3)},
        {"lorenz_time_scale", BIND_DOUBLE(trajectory.lorenz.time_scale)},
        {"lorenz_substeps", BIND_INT(trajectory.lorenz.substeps)},
        {"lorenz_box_min", BIND_VEC(trajectory.lorenz.box_min, 3)},
        {"lorenz_box_max", BIND_VEC(trajectory.lorenz.box_max, 3)},
        {"hover_point", BIND_VEC(trajectory.hover.point, 3)}}},
      {"gp",
       {{"observations", BIND_INT(gp.observations)},
        {"sizes", Binding{[](const ExperimentConfig& c) {
                            std::string out;
                            for (std::size_t i = 0; i < c.gp.sizes.size(); ++i)
                              out += (i ? "," : "") + std::to_string(c.gp.sizes[i]);
                            return out;
                          },
                          [](ExperimentConfig& c, const std::string& s) {
                            std::vector<std::string> parts;
                            boost::split(parts, s, boost::is_any_of(","));
                            c.gp.sizes.clear();
                            for (const auto& p : parts) c.gp.sizes.push_back(parse_int(p));
                          }}},
        {"random_subsets", BIND_BOOL(gp.random_subsets)},
        {"restarts", BIND_INT(gp.restarts)},
        {"max_iterations", BIND_INT(gp.max_iterations)},
        {"gradient_tolerance", BIND_DOUBLE(gp.gradient_tolerance)},
        {"noise_floor", BIND_DOUBLE(gp.noise_floor)}}},
      {"mpc",
       {{"horizon", BIND_INT(mpc.horizon)},
        {"q_translational", BIND_VEC(mpc.q_translational, 6)},
        {"r_translational", BIND_VEC(mpc.r_translational, 3)},
        {"q_rotational", BIND_VEC(mpc.q_rotational, 6)},
        {"r_rotational", BIND_VEC(mpc.r_rotational, 3)},
        {"u_translational_min", BIND_VEC(mpc.u_translational_min, 3)},
        {"u_translational_max", BIND_VEC(mpc.u_translational_max, 3)},
        {"u_rotational_min", BIND_VEC(mpc.u_rotational_min, 3)},
        {"u_rotational_max", BIND_VEC(mpc.u_rotational_max, 3)},
        {"start_at_hover", BIND_BOOL(mpc.start_at_hover)},
        {"tighten", BIND_BOOL(mpc.tighten)},
        {"warm_start", BIND_BOOL(mpc.warm_start)},
        {"qp_max_iterations", BIND_INT(mpc.qp_max_iterations)},
        {"failsafe_fraction", BIND_DOUBLE(mpc.failsafe_fraction)}}},
      {"baseline",
       {{"kp_translational", BIND_DOUBLE(baseline.kp_translational)},
        {"kd_translational", BIND_DOUBLE(baseline.kd_translational)},
        {"kp_rotational", BIND_DOUBLE(baseline.kp_rotational)},
        {"kd_rotational", BIND_DOUBLE(baseline.kd_rotational)}}},
  };
  return table;
}

#undef BIND_DOUBLE
#undef BIND_INT
#undef BIND_BOOL
#undef BIND_VEC

}  // namespace

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }

  ExperimentConfig c;
  for (const auto& [key, node] : tree)
    if (node.empty() && key == "preset") c = preset(boost::trim_copy(node.data()));
  for (const auto& [key, node] : tree) {
    if (!node.empty()) continue;
    if (key == "name") c.name = boost::trim_copy(node.data());
    else if (key != "preset") throw ContractViolation("config: unknown top-level key '" + key + "'");
  }

  for (const auto& [section, node] : tree) {
    if (node.empty()) continue;
    const auto& table = bindings();
    auto sec = std::find_if(table.begin(), table.end(), [&](const auto& s) { return s.first == section; });
    if (sec == table.end()) throw ContractViolation("config: unknown section [" + section + "]");
    for (const auto& [key, value] : node) {
      auto b = std::find_if(sec->second.begin(), sec->second.end(), [&](const auto& e) { return e.first == key; });
      if (b == sec->second.end()) throw ContractViolation("config: unknown key '" + section + "." + key + "'");
      b->second.set(c, value.data());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ContractViolation("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::string out = "name = " + c.name + "\n";
  for (const auto& [section, entries] : bindings()) {
    out += "\n[" + section + "]\n";
    for (const auto& [key, b] : entries) out += key + " = " + b.get(c) + "\n";
  }
  return out;
}

}  // namespace gpmpc::harness
