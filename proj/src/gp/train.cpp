#include "gpmpc/gp/train.hpp"

#include "gpmpc/gp/kernel.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <cmath>
#include <limits>
#include <random>

namespace gpmpc::gp {
namespace {

// The optimizer works on theta; theta == log params except the last entry,
// where sn2 = floor + exp(theta_last).
VectorX<double> to_log_params(VectorX<double> theta, double floor) {
  if (floor > 0) theta(theta.size() - 1) = std::log(floor + std::exp(theta(theta.size() - 1)));
  return theta;
}

VectorX<double> to_theta(VectorX<double> log_params, double floor) {
  if (floor > 0) {
    const double excess = std::exp(log_params(log_params.size() - 1)) - floor;
    log_params(log_params.size() - 1) = std::log(std::max(excess, 1e-3 * floor));
  }
  return log_params;
}

class NegativeLogLikelihood final : public ceres::FirstOrderFunction {
 public:
  NegativeLogLikelihood(const MatrixX<double>& inputs, VectorX<double> y, double floor)
      : inputs_(inputs), y_(std::move(y)), floor_(floor) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const VectorX<double>> theta(parameters, NumParameters());
    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 50.0) return false;
    try {
      const VectorX<double> p = to_log_params(theta, floor_);
      const auto r = log_marginal_likelihood(inputs_, y_, Hyperparameters<double>::from_log(p));
      if (!std::isfinite(r.value) || !r.gradient.allFinite()) return false;
      *cost = -r.value;
      if (gradient != nullptr) {
        Eigen::Map<VectorX<double>> g(gradient, NumParameters());
        g = -r.gradient;
        const Eigen::Index last = NumParameters() - 1;
        if (floor_ > 0) g(last) *= std::exp(theta(last) - p(last));
      }
      return true;
    } catch (const IllConditionedKernel&) {
      return false;
    }
  }

  int NumParameters() const override { return static_cast<int>(inputs_.cols() + 2); }

 private:
  const MatrixX<double>& inputs_;
  VectorX<double> y_;
  double floor_;
};

struct DimensionFit {
  Hyperparameters<double> hyper;
  double initial = 0;
  double best = 0;
  bool warning = false;
};

double evaluate(const MatrixX<double>& inputs, const VectorX<double>& y, const VectorX<double>& log_params) {
  try {
    return log_marginal_likelihood(inputs, y, Hyperparameters<double>::from_log(log_params)).value;
  } catch (const IllConditionedKernel&) {
    return -std::numeric_limits<double>::infinity();
  }
}

DimensionFit fit_dimension(const MatrixX<double>& inputs, const VectorX<double>& y,
                           const Hyperparameters<double>& init, const TrainOptions& options, std::uint64_t seed) {
  const auto yc = y.array() - y.mean();
  const double floor = options.noise_floor * std::max(yc.square().mean(), 1e-12);
  Hyperparameters<double> start_hyper = init;
  if (floor > 0 && init.noise_variance() < floor) {
    VectorX<double> p = init.log_params();
    p(p.size() - 1) = std::log(2 * floor);
    start_hyper = Hyperparameters<double>::from_log(p);
  }
  DimensionFit fit{start_hyper, 0, 0, false};
  const auto at_init = log_marginal_likelihood(inputs, y, start_hyper);
  fit.initial = at_init.value;
  fit.best = at_init.value;
  if (at_init.gradient.norm() < options.gradient_tolerance) return fit;

  ceres::GradientProblemSolver::Options solver_options;
  solver_options.max_num_iterations = options.max_iterations;
  solver_options.gradient_tolerance = options.gradient_tolerance;
  solver_options.function_tolerance = 1e-12;
  solver_options.parameter_tolerance = 1e-12;
  solver_options.logging_type = ceres::SILENT;
  solver_options.minimizer_progress_to_stdout = false;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> perturb(0.0, options.restart_spread);

  VectorX<double> best = start_hyper.log_params();
  for (int start = 0; start < std::max(1, options.restarts); ++start) {
    VectorX<double> theta = to_theta(start_hyper.log_params(), floor);
    if (start > 0) {
      for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += perturb(rng);
    }
    if (!std::isfinite(evaluate(inputs, y, to_log_params(theta, floor)))) {
      fit.warning = true;
      continue;
    }
    ceres::GradientProblem problem(new NegativeLogLikelihood(inputs, y, floor));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(solver_options, problem, theta.data(), &summary);
    // A line-search stall still leaves the last accepted iterate in theta;
    // it competes like any other. Only a non-finite outcome is divergence.
    const VectorX<double> x = to_log_params(theta, floor);
    const double value = theta.allFinite() ? evaluate(inputs, y, x) : -std::numeric_limits<double>::infinity();
    if (!std::isfinite(value)) {
      fit.warning = true;
      continue;
    }
    if (value > fit.best) {
      fit.best = value;
      best = x;
    }
  }
  fit.hyper = Hyperparameters<double>::from_log(best);
  return fit;
}

}  // namespace

Hyperparameters<double> default_hyperparameters(const Dataset<double>& data, Eigen::Index output) {
  require(output >= 0 && output < data.state_dim(), "default_hyperparameters: output out of range");
  const Eigen::Index e = data.input_dim();
  VectorX<double> lengthscales(e);
  for (Eigen::Index c = 0; c < e; ++c) {
    const auto col = data.inputs.col(c).array();
    const double spread = std::sqrt((col - col.mean()).square().mean());
    lengthscales(c) = spread > 1e-8 ? spread : 1.0;
  }
  const auto y = data.targets.col(output).array();
  const double var = (y - y.mean()).square().mean();
  const double signal = std::max(var, 1e-6);
  return Hyperparameters<double>(lengthscales, signal, signal * 1e-2);
}

TrainResult train(const Dataset<double>& data, const std::vector<Hyperparameters<double>>& init,
                  const TrainOptions& options) {
  data.validate();
  require(static_cast<Eigen::Index>(init.size()) == data.state_dim(), "train: one init per output");
  require(options.max_iterations >= 1, "train: iteration budget must be positive");
  require(options.noise_floor >= 0, "train: noise floor must be nonnegative");

  std::vector<Hyperparameters<double>> hyper;
  std::vector<double> initial, final_ll;
  bool warning = false;
  for (Eigen::Index a = 0; a < data.state_dim(); ++a) {
    const VectorX<double> y = data.targets.col(a);
    DimensionFit fit = fit_dimension(data.inputs, y, init[static_cast<std::size_t>(a)], options,
                                     options.seed * 1000003ULL + static_cast<std::uint64_t>(a));
    hyper.push_back(fit.hyper);
    initial.push_back(fit.initial);
    final_ll.push_back(fit.best);
    warning = warning || fit.warning;
  }
  return TrainResult{TrainedGP<double>(data, std::move(hyper)), std::move(initial), std::move(final_ll), warning};
}

TrainResult train(const Dataset<double>& data, const TrainOptions& options) {
  std::vector<Hyperparameters<double>> init;
  for (Eigen::Index a = 0; a < data.state_dim(); ++a) init.push_back(default_hyperparameters(data, a));
  return train(data, init, options);
}

double log_marginal_likelihood(const Dataset<double>& data, const std::vector<Hyperparameters<double>>& hyper) {
  require(static_cast<Eigen::Index>(hyper.size()) == data.state_dim(), "one hyperparameter set per output");
  double total = 0;
  for (Eigen::Index a = 0; a < data.state_dim(); ++a)
    total += log_marginal_likelihood<double>(data.inputs, data.targets.col(a), hyper[static_cast<std::size_t>(a)]).value;
  return total;
}

}  // namespace gpmpc::gp
