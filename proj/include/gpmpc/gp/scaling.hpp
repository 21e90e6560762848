#pragma once

#include "gpmpc/common.hpp"

#include <vector>

namespace gpmpc::gp {

/// Per-column affine map taking the fitted raw range onto [0.1, 0.9].
///
/// scaled = offset + gain * raw. Constant columns get gain 1 and an offset that
/// sends the constant to 0.5; they are reported through degenerate().
template <typename Scalar>
class ScalingTransform {
 public:
  static constexpr Scalar kLow = Scalar(0.1);
  static constexpr Scalar kHigh = Scalar(0.9);

  ScalingTransform() = default;
  ScalingTransform(VectorX<Scalar> offset, VectorX<Scalar> gain, std::vector<bool> degenerate = {})
      : offset_(std::move(offset)), gain_(std::move(gain)), degenerate_(std::move(degenerate)) {
    require(offset_.size() == gain_.size(), "offset/gain size mismatch");
    require((gain_.array() > 0).all(), "scaling gains must be positive");
    if (degenerate_.empty()) degenerate_.assign(static_cast<std::size_t>(gain_.size()), false);
  }

  /// Fits one transform per column of `data` (rows are samples).
  static ScalingTransform fit(const MatrixX<Scalar>& data) {
    require(data.rows() >= 1, "cannot fit scaling on empty data");
    const Eigen::Index cols = data.cols();
    VectorX<Scalar> offset(cols), gain(cols);
    std::vector<bool> degenerate(static_cast<std::size_t>(cols), false);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Scalar lo = data.col(c).minCoeff();
      const Scalar hi = data.col(c).maxCoeff();
      const Scalar range = hi - lo;
      if (!(range > Scalar(0))) {
        gain(c) = Scalar(1);
        offset(c) = Scalar(0.5) - lo;
        degenerate[static_cast<std::size_t>(c)] = true;
      } else {
        gain(c) = (kHigh - kLow) / range;
        offset(c) = kLow - gain(c) * lo;
      }
    }
    return ScalingTransform(offset, gain, degenerate);
  }

  /// Sub-transform restricted to a contiguous column block.
  ScalingTransform segment(Eigen::Index start, Eigen::Index size) const {
    std::vector<bool> deg(degenerate_.begin() + start, degenerate_.begin() + start + size);
    return ScalingTransform(offset_.segment(start, size), gain_.segment(start, size), deg);
  }

  Eigen::Index size() const { return gain_.size(); }

  VectorX<Scalar> scale(const VectorX<Scalar>& raw) const {
    return (offset_.array() + gain_.array() * raw.array()).matrix();
  }
  VectorX<Scalar> unscale(const VectorX<Scalar>& scaled) const {
    return ((scaled.array() - offset_.array()) / gain_.array()).matrix();
  }
  /// Scales a difference of two raw vectors (offset cancels).
  VectorX<Scalar> scale_delta(const VectorX<Scalar>& raw_delta) const {
    return (gain_.array() * raw_delta.array()).matrix();
  }

  MatrixX<Scalar> scale_rows(const MatrixX<Scalar>& raw) const {
    MatrixX<Scalar> out(raw.rows(), raw.cols());
    for (Eigen::Index r = 0; r < raw.rows(); ++r) out.row(r) = scale(raw.row(r).transpose()).transpose();
    return out;
  }
  MatrixX<Scalar> unscale_rows(const MatrixX<Scalar>& scaled) const {
    MatrixX<Scalar> out(scaled.rows(), scaled.cols());
    for (Eigen::Index r = 0; r < scaled.rows(); ++r) out.row(r) = unscale(scaled.row(r).transpose()).transpose();
    return out;
  }

  const VectorX<Scalar>& offset() const { return offset_; }
  const VectorX<Scalar>& gain() const { return gain_; }
  const std::vector<bool>& degenerate() const { return degenerate_; }
  bool any_degenerate() const {
    for (bool d : degenerate_)
      if (d) return true;
    return false;
  }

 private:
  VectorX<Scalar> offset_;
  VectorX<Scalar> gain_;
  std::vector<bool> degenerate_;
};

}  // namespace gpmpc::gp
