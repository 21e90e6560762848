#pragma once

#include "gpmpc/common.hpp"
#include "gpmpc/gp/dataset.hpp"
#include "gpmpc/gp/gaussian_state.hpp"
#include "gpmpc/gp/hyperparameters.hpp"
#include "gpmpc/gp/kernel.hpp"

#include <vector>

namespace gpmpc::gp {

/// n independent scalar GPs over a shared input set, with cached Gram
/// factorizations. Immutable after construction.
template <typename Scalar>
class TrainedGP {
 public:
  TrainedGP(Dataset<Scalar> data, std::vector<Hyperparameters<Scalar>> hyper)
      : data_(std::move(data)), hyper_(std::move(hyper)) {
    data_.validate();
    require(static_cast<Eigen::Index>(hyper_.size()) == data_.state_dim(), "one hyperparameter set per output");
    for (const auto& h : hyper_) require(h.input_dim() == data_.input_dim(), "hyperparameter input dimension");
    const Eigen::Index d = data_.size();
    for (std::size_t a = 0; a < hyper_.size(); ++a) {
      MatrixX<Scalar> gram = kernel_matrix(data_.inputs, data_.inputs, hyper_[a]);
      gram.diagonal().array() += hyper_[a].noise_variance();
      GramFactor<Scalar> f = factorize_gram(std::move(gram));
      alpha_.push_back(f.llt.solve(data_.targets.col(static_cast<Eigen::Index>(a))));
      kinv_.push_back(f.llt.solve(MatrixX<Scalar>::Identity(d, d)));
      factor_.push_back(std::move(f));
    }
  }

  const Dataset<Scalar>& dataset() const { return data_; }
  const Hyperparameters<Scalar>& hyper(Eigen::Index a) const { return hyper_[static_cast<std::size_t>(a)]; }
  const std::vector<Hyperparameters<Scalar>>& hyper() const { return hyper_; }
  const VectorX<Scalar>& alpha(Eigen::Index a) const { return alpha_[static_cast<std::size_t>(a)]; }
  const GramFactor<Scalar>& factor(Eigen::Index a) const { return factor_[static_cast<std::size_t>(a)]; }
  /// (K + sn2 I + jitter)^{-1}
  const MatrixX<Scalar>& gram_inverse(Eigen::Index a) const { return kinv_[static_cast<std::size_t>(a)]; }

  Eigen::Index state_dim() const { return data_.state_dim(); }
  Eigen::Index control_dim() const { return data_.control_dim(); }
  Eigen::Index input_dim() const { return data_.input_dim(); }

 private:
  Dataset<Scalar> data_;
  std::vector<Hyperparameters<Scalar>> hyper_;
  std::vector<GramFactor<Scalar>> factor_;
  std::vector<VectorX<Scalar>> alpha_;
  std::vector<MatrixX<Scalar>> kinv_;
};

template <typename Scalar>
struct PointPrediction {
  VectorX<Scalar> mean;      // E_f[dx]
  VectorX<Scalar> variance;  // Var_f[dx], one entry per output
};

/// Posterior of the state difference at a deterministic state-control tuple.
template <typename Scalar>
PointPrediction<Scalar> predict_point(const TrainedGP<Scalar>& gp, const VectorX<Scalar>& x) {
  if (x.size() != gp.input_dim()) throw ContractViolation("predict_point: input dimension mismatch");
  const Eigen::Index n = gp.state_dim();
  PointPrediction<Scalar> out{VectorX<Scalar>(n), VectorX<Scalar>(n)};
  const MatrixX<Scalar> xrow = x.transpose();
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& h = gp.hyper(a);
    const VectorX<Scalar> k = kernel_matrix(gp.dataset().inputs, xrow, h).col(0);
    out.mean(a) = k.dot(gp.alpha(a));
    const VectorX<Scalar> v = gp.factor(a).llt.matrixL().solve(k);
    const Scalar var = h.signal_variance() - v.squaredNorm();
    if (var < -Scalar(kPsdTolerance) * std::max(Scalar(1), h.signal_variance()))
      throw PropagationInstability("predict_point: negative predictive variance");
    out.variance(a) = std::max(var, Scalar(0));
  }
  return out;
}

}  // namespace gpmpc::gp
