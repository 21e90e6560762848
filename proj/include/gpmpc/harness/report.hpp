#pragma once

#include "gpmpc/harness/sweep.hpp"
#include "gpmpc/harness/tracking.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gpmpc::harness {

/// Everything one (config, seed) produces. Wall times are kept here only for
/// timing.log; nothing else depends on them.
struct ExperimentRun {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  CollectedData data;
  std::vector<SweepCell> sweep;
  std::optional<Models> models;
  std::optional<TrackingResult> tracking;
  double collect_seconds = 0, sweep_seconds = 0, train_seconds = 0, track_seconds = 0;
};

struct RunStages {
  bool sweep = false;
  bool train = false;
  bool track = false;  // implies train
};

ExperimentRun run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, RunStages stages);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Git blob id (sha1 over "blob <len>\0" + text), so it matches
/// `git hash-object` on the written file.
std::string git_blob_sha1(const std::string& text);

/// Scaled inputs and targets, one row per transition. The dataset hash is the
/// blob id of exactly this text.
std::string dataset_csv(const gp::Dataset<double>& d);
std::string scaling_csv(const CollectedData& data);
std::string sweep_csv(const std::vector<SweepCell>& cells);
std::string tracking_csv(const std::vector<StepRecord>& steps);
std::string timing_log(const ExperimentRun& run);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Size-sweep shape: full-size test equals train, and the largest size beats
/// the smallest on test MSE and average variance, per subsystem.
std::vector<Check> sweep_checks(const std::vector<SweepCell>& cells, int full_size);
/// Zero input-bound violations, no failed run, final-quarter error within
/// `relative_limit` of the characteristic radius.
std::vector<Check> tracking_checks(const TrackingMetrics& m, double relative_limit = 0.10);

/// Independent trials at seeds seed, seed + 1, ... run on `workers` threads;
/// results come back in seed order whatever the scheduling.
struct TrialOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  TrackingMetrics metrics;
  std::string error;
};
std::vector<TrialOutcome> run_trials(const ExperimentConfig& cfg, std::uint64_t seed, int trials, int workers);

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single value
  int count = 0;
};
MeanStd mean_std(const std::vector<double>& values);
std::string trials_csv(const std::vector<TrialOutcome>& trials);

/// summary.json: config snapshot, seed, dataset hashes, sweep, metrics (each
/// with the space it is measured in), checks and optional trial aggregates.
std::string summary_json(const ExperimentRun& run, const std::vector<Check>& checks,
                         const std::vector<TrialOutcome>& trials = {});

}  // namespace gpmpc::harness
