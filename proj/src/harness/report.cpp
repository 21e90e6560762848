#include "gpmpc/harness/report.hpp"

#include <boost/uuid/detail/sha1.hpp>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace gpmpc::harness {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename Row>
void csv_row(std::ostringstream& out, const Row& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i > 0) out << ',';
    out << format_double(values(i));
  }
}

nlohmann::json vec(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

nlohmann::json metric(nlohmann::json value, const char* space) { return {{"value", std::move(value)}, {"space", space}}; }

nlohmann::json model_json(const SubsystemModel& m) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& h : m.gp.hyper())
    outputs.push_back({{"lengthscales", vec(h.lengthscales())},
                       {"signal_variance", h.signal_variance()},
                       {"noise_variance", h.noise_variance()}});
  return {{"hyperparameters", outputs}, {"space", "scaled"}, {"training_warning", m.training_warning}};
}

nlohmann::json scaling_json(const gp::ScalingTransform<double>& s) {
  nlohmann::json degenerate = nlohmann::json::array();
  for (bool d : s.degenerate()) degenerate.push_back(d);
  return {{"offset", vec(s.offset())}, {"gain", vec(s.gain())}, {"degenerate", degenerate}};
}

}  // namespace

ExperimentRun run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, RunStages stages) {
  cfg.validate();
  ExperimentRun run;
  run.config = cfg;
  run.seed = seed;
  auto t0 = Clock::now();
  run.data = collect_data(cfg, cfg.gp.observations, seed);
  run.collect_seconds = since(t0);
  if (stages.sweep) {
    t0 = Clock::now();
    run.sweep = training_sweep(run.data, cfg.gp, seed);
    run.sweep_seconds = since(t0);
  }
  if (stages.train || stages.track) {
    t0 = Clock::now();
    run.models = train_models(run.data, cfg, seed);
    run.train_seconds = since(t0);
  }
  if (stages.track) {
    t0 = Clock::now();
    run.tracking = run_closed_loop(cfg, *run.models, run.data.trajectory, seed);
    run.track_seconds = since(t0);
  }
  return run;
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string git_blob_sha1(const std::string& text) {
  boost::uuids::detail::sha1 h;
  const std::string header = "blob " + std::to_string(text.size());
  h.process_bytes(header.data(), header.size() + 1);  // includes the terminating NUL
  h.process_bytes(text.data(), text.size());
  boost::uuids::detail::sha1::digest_type digest;
  h.get_digest(digest);
  char hex[41];
  for (int i = 0; i < 5; ++i) std::snprintf(hex + 8 * i, 9, "%08x", digest[i]);
  return std::string(hex, 40);
}

std::string dataset_csv(const gp::Dataset<double>& d) {
  std::ostringstream out;
  const Eigen::Index n = d.state_dim();
  for (Eigen::Index c = 0; c < n; ++c) out << 'x' << c << ',';
  for (Eigen::Index c = 0; c < d.control_dim(); ++c) out << 'u' << c << ',';
  for (Eigen::Index c = 0; c < n; ++c) out << "dx" << c << (c + 1 < n ? "," : "\n");
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    csv_row(out, d.inputs.row(i));
    out << ',';
    csv_row(out, d.targets.row(i));
    out << '\n';
  }
  return out.str();
}

std::string scaling_csv(const CollectedData& data) {
  std::ostringstream out;
  out << "subsystem,column,offset,gain,degenerate\n";
  auto emit = [&](const char* name, const gp::ScalingTransform<double>& s) {
    for (Eigen::Index c = 0; c < s.size(); ++c)
      out << name << ',' << c << ',' << format_double(s.offset()(c)) << ',' << format_double(s.gain()(c)) << ','
          << (s.degenerate()[static_cast<std::size_t>(c)] ? 1 : 0) << '\n';
  };
  emit("translational", data.translational.scaling);
  emit("rotational", data.rotational.scaling);
  return out.str();
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "subsystem,size,status,train_mse,test_mse,average_variance,training_warning,space\n";
  for (const auto& c : cells) {
    out << c.subsystem << ',' << c.size << ',' << (c.ok ? "ok" : "failed") << ',';
    if (c.ok)
      out << format_double(c.train_mse) << ',' << format_double(c.test_mse) << ',' << format_double(c.average_variance);
    else
      out << ",,";
    out << ',' << (c.training_warning ? 1 : 0) << ",scaled\n";
  }
  return out.str();
}

std::string tracking_csv(const std::vector<StepRecord>& steps) {
  std::ostringstream out;
  out << "step,t,x,y,z,x_ref,y_ref,z_ref,phi,theta,psi,phi_d,theta_d,U1,ux,uy,U2,U3,U4,"
         "qp_iterations_translational,qp_iterations_rotational,cost_translational,cost_rotational,"
         "failsafe_translational,failsafe_rotational,rows_relaxed\n";
  for (const auto& s : steps) {
    out << s.step << ',' << format_double(s.t) << ',';
    csv_row(out, s.position);
    out << ',';
    csv_row(out, s.reference);
    out << ',';
    csv_row(out, s.angles);
    out << ',' << format_double(s.phi_d) << ',' << format_double(s.theta_d) << ',';
    csv_row(out, s.u_translational);
    out << ',';
    csv_row(out, s.u_rotational);
    out << ',' << s.qp_iterations_translational << ',' << s.qp_iterations_rotational << ','
        << format_double(s.cost_translational) << ',' << format_double(s.cost_rotational) << ','
        << (s.failsafe_translational ? 1 : 0) << ',' << (s.failsafe_rotational ? 1 : 0) << ',' << s.rows_relaxed
        << '\n';
  }
  return out.str();
}

std::string timing_log(const ExperimentRun& run) {
  std::ostringstream out;
  out << "collect_seconds " << run.collect_seconds << '\n'
      << "sweep_seconds " << run.sweep_seconds << '\n'
      << "train_seconds " << run.train_seconds << '\n'
      << "track_seconds " << run.track_seconds << '\n';
  if (run.tracking) {
    out << "step wall_seconds\n";
    for (std::size_t k = 0; k < run.tracking->wall_time.size(); ++k)
      out << k << ' ' << run.tracking->wall_time[k] << '\n';
  }
  return out.str();
}

std::vector<Check> sweep_checks(const std::vector<SweepCell>& cells, int full_size) {
  std::vector<Check> out;
  for (const char* sub : {"translational", "rotational"}) {
    const SweepCell* smallest = nullptr;
    const SweepCell* largest = nullptr;
    bool all_ok = true;
    for (const auto& c : cells) {
      if (c.subsystem != sub) continue;
      all_ok = all_ok && c.ok;
      if (!c.ok) continue;
      if (!smallest || c.size < smallest->size) smallest = &c;
      if (!largest || c.size > largest->size) largest = &c;
    }
    const std::string prefix = std::string("sweep ") + sub + ": ";
    out.push_back({prefix + "every size trained", all_ok, ""});
    if (!smallest || !largest) continue;
    if (largest->size == full_size)
      out.push_back({prefix + "full-size test MSE equals train MSE", largest->test_mse == largest->train_mse,
                     format_double(largest->test_mse) + " vs " + format_double(largest->train_mse)});
    else
      out.push_back({prefix + "full-size test MSE equals train MSE", false, "largest size is not the full dataset"});
    out.push_back({prefix + "test MSE at largest <= at smallest", largest->test_mse <= smallest->test_mse,
                   format_double(largest->test_mse) + " vs " + format_double(smallest->test_mse)});
    out.push_back({prefix + "average variance at largest <= at smallest",
                   largest->average_variance <= smallest->average_variance,
                   format_double(largest->average_variance) + " vs " + format_double(smallest->average_variance)});
  }
  return out;
}

std::vector<Check> tracking_checks(const TrackingMetrics& m, double relative_limit) {
  return {
      {"tracking: zero input-bound violations", m.violations_translational == 0 && m.violations_rotational == 0,
       std::to_string(m.violations_translational) + " translational, " + std::to_string(m.violations_rotational) +
           " rotational"},
      {"tracking: run not failed", !m.failed,
       std::to_string(m.failsafe_steps) + " fail-safe steps" +
           (m.first_failure.empty() ? "" : ", first: " + m.first_failure)},
      {"tracking: final-quarter RMSE within limit of characteristic radius", m.relative_final_quarter <= relative_limit,
       format_double(m.relative_final_quarter) + " <= " + format_double(relative_limit)},
  };
}

std::vector<TrialOutcome> run_trials(const ExperimentConfig& cfg, std::uint64_t seed, int trials, int workers) {
  require(trials >= 1, "run_trials: need at least one trial");
  std::vector<TrialOutcome> out(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < trials; i = next++) {
      TrialOutcome& t = out[static_cast<std::size_t>(i)];
      t.seed = seed + static_cast<std::uint64_t>(i);
      try {
        t.metrics = run_experiment(cfg, t.seed, {.track = true}).tracking->metrics;
        t.ok = true;
      } catch (const std::exception& e) {
        t.error = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min(workers, trials));
  std::vector<std::thread> pool;
  for (int w = 1; w < threads; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  r.count = static_cast<int>(values.size());
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= r.count;
  if (r.count > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / (r.count - 1));
  }
  return r;
}

std::string trials_csv(const std::vector<TrialOutcome>& trials) {
  std::ostringstream out;
  out << "seed,status,rmse,final_quarter_rmse,relative_final_quarter,violations_translational,"
         "violations_rotational,failsafe_steps,mean_qp_iterations_translational,mean_qp_iterations_rotational\n";
  for (const auto& t : trials) {
    const auto& m = t.metrics;
    out << t.seed << ',' << (t.ok ? (m.failed ? "failed" : "ok") : "error") << ',';
    if (t.ok)
      out << format_double(m.rmse) << ',' << format_double(m.final_quarter_rmse) << ','
          << format_double(m.relative_final_quarter) << ',' << m.violations_translational << ','
          << m.violations_rotational << ',' << m.failsafe_steps << ','
          << format_double(m.mean_qp_iterations_translational) << ','
          << format_double(m.mean_qp_iterations_rotational);
    else
      out << ",,,,,,,";
    out << '\n';
  }
  return out.str();
}

std::string summary_json(const ExperimentRun& run, const std::vector<Check>& checks,
                         const std::vector<TrialOutcome>& trials) {
  nlohmann::json j;
  j["name"] = run.config.name;
  j["seed"] = run.seed;
  j["config"] = to_ini(run.config);
  j["datasets"] = {
      {"translational",
       {{"rows", run.data.translational.scaled.size()},
        {"sha1", git_blob_sha1(dataset_csv(run.data.translational.scaled))},
        {"space", "scaled"},
        {"scaling", scaling_json(run.data.translational.scaling)}}},
      {"rotational",
       {{"rows", run.data.rotational.scaled.size()},
        {"sha1", git_blob_sha1(dataset_csv(run.data.rotational.scaled))},
        {"space", "scaled"},
        {"scaling", scaling_json(run.data.rotational.scaling)}}},
  };
  if (!run.sweep.empty()) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : run.sweep) {
      nlohmann::json cell = {{"subsystem", c.subsystem}, {"size", c.size}, {"ok", c.ok}, {"space", "scaled"}};
      if (c.ok) {
        cell["train_mse"] = c.train_mse;
        cell["test_mse"] = c.test_mse;
        cell["average_variance"] = c.average_variance;
        cell["training_warning"] = c.training_warning;
      } else {
        cell["error"] = c.error;
      }
      cells.push_back(cell);
    }
    j["sweep"] = cells;
  }
  if (run.models) j["models"] = {{"translational", model_json(run.models->translational)},
                                 {"rotational", model_json(run.models->rotational)}};
  if (run.tracking) {
    const TrackingMetrics& m = run.tracking->metrics;
    j["tracking"] = {
        {"steps", run.tracking->steps.size()},
        {"position_rmse_axis", metric(vec(m.rmse_axis), "raw (m)")},
        {"position_rmse", metric(m.rmse, "raw (m)")},
        {"final_quarter_rmse", metric(m.final_quarter_rmse, "raw (m)")},
        {"characteristic_radius", metric(m.characteristic_radius, "raw (m)")},
        {"relative_final_quarter", metric(m.relative_final_quarter, "ratio")},
        {"attitude_rmse", metric(vec(m.attitude_rmse_scaled), "scaled (rotational)")},
        {"violations_translational", metric(m.violations_translational, "count, raw bounds")},
        {"violations_rotational", metric(m.violations_rotational, "count, raw bounds")},
        {"failsafe_steps", metric(m.failsafe_steps, "count")},
        {"mean_qp_iterations_translational", metric(m.mean_qp_iterations_translational, "iterations per step")},
        {"mean_qp_iterations_rotational", metric(m.mean_qp_iterations_rotational, "iterations per step")},
        {"failed", m.failed},
        {"first_failure", m.first_failure},
    };
  }
  if (!trials.empty()) {
    std::vector<double> rmse, rel, viol, iters;
    int failed = 0;
    for (const auto& t : trials) {
      if (!t.ok) {
        ++failed;
        continue;
      }
      failed += t.metrics.failed ? 1 : 0;
      rmse.push_back(t.metrics.rmse);
      rel.push_back(t.metrics.relative_final_quarter);
      viol.push_back(t.metrics.violations_translational + t.metrics.violations_rotational);
      iters.push_back(t.metrics.mean_qp_iterations_translational);
    }
    auto ms = [](const std::vector<double>& v, const char* space) {
      const MeanStd s = mean_std(v);
      return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}, {"space", space}};
    };
    j["trials"] = {
        {"count", trials.size()},
        {"first_seed", trials.front().seed},
        {"failed_or_error", failed},
        {"position_rmse", ms(rmse, "raw (m)")},
        {"relative_final_quarter", ms(rel, "ratio")},
        {"violations", ms(viol, "count, raw bounds")},
        {"mean_qp_iterations_translational", ms(iters, "iterations per step")},
    };
  }
  nlohmann::json cj = nlohmann::json::array();
  bool all = true;
  for (const auto& c : checks) {
    cj.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    all = all && c.pass;
  }
  j["checks"] = cj;
  j["all_checks_pass"] = all;
  return j.dump(2) + "\n";
}

}  // namespace gpmpc::harness
