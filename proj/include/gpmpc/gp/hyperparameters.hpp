#pragma once

#include "gpmpc/common.hpp"

#include <cmath>

namespace gpmpc::gp {

/// SE-ARD hyperparameters of one scalar GP, stored in log space.
///
/// Layout of the packed log vector: [log l_1 .. log l_E, log sf2, log sn2],
/// where sf2 is the signal variance and sn2 the noise variance.
template <typename Scalar>
class Hyperparameters {
 public:
  Hyperparameters() = default;

  Hyperparameters(const VectorX<Scalar>& lengthscales, Scalar signal_variance, Scalar noise_variance) {
    require((lengthscales.array() > 0).all(), "lengthscales must be strictly positive");
    require(signal_variance > 0, "signal variance must be positive");
    require(noise_variance > 0, "noise variance must be positive");
    log_.resize(lengthscales.size() + 2);
    log_.head(lengthscales.size()) = lengthscales.array().log().matrix();
    log_(lengthscales.size()) = std::log(signal_variance);
    log_(lengthscales.size() + 1) = std::log(noise_variance);
  }

  static Hyperparameters from_log(const VectorX<Scalar>& packed) {
    require(packed.size() >= 3, "packed hyperparameter vector too short");
    require(packed.allFinite(), "log hyperparameters must be finite");
    Hyperparameters h;
    h.log_ = packed;
    return h;
  }

  Eigen::Index input_dim() const { return log_.size() - 2; }

  VectorX<Scalar> lengthscales() const { return log_.head(input_dim()).array().exp().matrix(); }
  Scalar signal_variance() const { return std::exp(log_(input_dim())); }
  Scalar noise_variance() const { return std::exp(log_(input_dim() + 1)); }

  /// Diagonal of the inverse squared-lengthscale matrix.
  VectorX<Scalar> inverse_sq_lengthscales() const {
    return (-2 * log_.head(input_dim()).array()).exp().matrix();
  }

  const VectorX<Scalar>& log_params() const { return log_; }

 private:
  VectorX<Scalar> log_;
};

}  // namespace gpmpc::gp
