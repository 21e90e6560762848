#include "gpmpc/harness/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace gpmpc::harness;

namespace {

struct Options {
  std::string config_path;
  std::string preset_name = "default";
  std::uint64_t seed = 1;
  std::string trajectory;
  int horizon = 0;
  std::string out = "out";
  bool check = false;
  int trials = 1;
  int workers = 0;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = o.config_path.empty() ? preset(o.preset_name) : load_config(o.config_path);
  if (!o.trajectory.empty()) cfg.trajectory.kind = parse_trajectory_kind(o.trajectory);
  if (o.horizon > 0) cfg.mpc.horizon = o.horizon;
  cfg.validate();
  return cfg;
}

void write(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  f << text;
  std::cout << "wrote " << (dir / name).string() << '\n';
}

int finish(const std::vector<Check>& checks, bool enforce) {
  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << '\n';
    all = all && c.pass;
  }
  return enforce && !all ? 1 : 0;
}

int run(const std::string& command, const Options& o) {
  const ExperimentConfig cfg = resolve(o);
  const fs::path dir(o.out);
  fs::create_directories(dir);

  RunStages stages;
  stages.sweep = command == "sweep" || command == "report";
  stages.train = command == "train";
  stages.track = command == "track" || command == "report";
  const ExperimentRun r = run_experiment(cfg, o.seed, stages);

  std::vector<Check> checks;
  if (stages.sweep) checks = sweep_checks(r.sweep, cfg.gp.observations);
  if (stages.track) {
    const auto t = tracking_checks(r.tracking->metrics);
    checks.insert(checks.end(), t.begin(), t.end());
  }
  std::vector<TrialOutcome> trials;
  if (stages.track && o.trials > 1) {
    const int workers = o.workers > 0 ? o.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    trials = run_trials(cfg, o.seed, o.trials, workers);
  }

  write(dir, "translational_dataset.csv", dataset_csv(r.data.translational.scaled));
  write(dir, "rotational_dataset.csv", dataset_csv(r.data.rotational.scaled));
  write(dir, "scaling.csv", scaling_csv(r.data));
  if (stages.sweep) write(dir, "sweep.csv", sweep_csv(r.sweep));
  if (stages.track) write(dir, "tracking.csv", tracking_csv(r.tracking->steps));
  if (!trials.empty()) write(dir, "trials.csv", trials_csv(trials));
  write(dir, "summary.json", summary_json(r, checks, trials));
  write(dir, "timing.log", timing_log(r));
  return finish(checks, o.check);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-based MPC experiments on a simulated quadrotor"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Options o;
  app.add_option("--config", o.config_path, "INI config file (overrides --preset)");
  app.add_option("--preset", o.preset_name, "named preset")->check(CLI::IsMember(preset_names()));
  app.add_option("--seed", o.seed, "experiment seed");
  app.add_option("--trajectory", o.trajectory, "reference kind")->check(CLI::IsMember({"elliptical", "lorenz", "hover"}));
  app.add_option("--horizon", o.horizon, "prediction horizon")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--check", o.check, "exit nonzero when an assertion fails");
  app.add_option("--trials", o.trials, "track/report: independent trials at consecutive seeds")
      ->check(CLI::PositiveNumber);
  app.add_option("--workers", o.workers, "threads for trials (default: hardware)")->check(CLI::NonNegativeNumber);

  std::string command;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"collect", "fly the baseline and write the scaled datasets"},
           {"train", "collect, then fit both GP models"},
           {"sweep", "collect, then the training-size sweep"},
           {"track", "collect, train, then the closed-loop run"},
           {"report", "sweep and track, every output and check"},
       })
    app.add_subcommand(name, help)->callback([&command, name = name] { command = name; });
  app.add_subcommand("config", "print the resolved config as INI")->callback([&command] { command = "config"; });
  CLI11_PARSE(app, argc, argv);
  try {
    if (command == "config") {
      std::cout << to_ini(resolve(o));
      return 0;
    }
    return run(command, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
