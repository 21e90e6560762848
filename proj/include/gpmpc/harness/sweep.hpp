#pragma once

#include "gpmpc/harness/collect.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gpmpc::harness {

/// One (subsystem, size) entry. MSE and variance are averaged over rows and
/// outputs, in the subsystem's scaled space.
struct SweepCell {
  std::string subsystem;
  int size = 0;
  bool ok = false;
  double train_mse = 0;
  double test_mse = 0;
  double average_variance = 0;  // latent predictive variance on the test set
  bool training_warning = false;
  std::string error;
};

/// Rows a model of the given size is trained on: a prefix, or with
/// `random_subsets` a sorted draw without replacement.
std::vector<Eigen::Index> sweep_rows(Eigen::Index total, int size, bool random_subsets, std::uint64_t seed);

/// Trains on each requested size and evaluates on those rows and on the full
/// dataset. A failed cell is recorded and the sweep moves on.
std::vector<SweepCell> training_sweep(const gp::Dataset<double>& data, const std::string& subsystem,
                                      const GPSettings& settings, std::uint64_t seed);

/// Both subsystems, translational first.
std::vector<SweepCell> training_sweep(const CollectedData& data, const GPSettings& settings, std::uint64_t seed);

/// Mean squared error of the posterior mean and mean latent variance on `data`.
struct FitQuality {
  double mse = 0;
  double average_variance = 0;
};
FitQuality evaluate_fit(const gp::TrainedGP<double>& gp, const gp::Dataset<double>& data);

}  // namespace gpmpc::harness
