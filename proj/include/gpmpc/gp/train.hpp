#pragma once

#include "gpmpc/gp/dataset.hpp"
#include "gpmpc/gp/hyperparameters.hpp"
#include "gpmpc/gp/model.hpp"

#include <cstdint>
#include <vector>

namespace gpmpc::gp {

struct TrainOptions {
  int restarts = 5;  // total starts per output; the first is always the given init
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double restart_spread = 1.0;  // std of the log-space perturbation for extra starts
  // Lower bound on the noise variance as a fraction of the target variance.
  // Noise-free outputs otherwise drive sn2 to zero and the fit interpolates
  // with meaningless gradients. 0 disables.
  double noise_floor = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  TrainedGP<double> gp;
  std::vector<double> initial_log_likelihood;  // per output, at the init
  std::vector<double> log_likelihood;          // per output, at the returned hyperparameters
  bool warning = false;                        // some start diverged to a non-finite point
};

/// Heuristic starting point: lengthscales from input spread, signal variance
/// from target variance, noise at 1% of signal.
Hyperparameters<double> default_hyperparameters(const Dataset<double>& data, Eigen::Index output);

/// Maximizes the log marginal likelihood independently per output dimension
/// with L-BFGS in log-hyperparameter space.
TrainResult train(const Dataset<double>& data, const std::vector<Hyperparameters<double>>& init,
                  const TrainOptions& options = {});

/// Convenience overload that uses default_hyperparameters for every output.
TrainResult train(const Dataset<double>& data, const TrainOptions& options = {});

/// Sum over outputs of the per-output log marginal likelihood.
double log_marginal_likelihood(const Dataset<double>& data, const std::vector<Hyperparameters<double>>& hyper);

}  // namespace gpmpc::gp
