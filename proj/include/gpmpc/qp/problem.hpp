#pragma once

#include "gpmpc/common.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpmpc::qp {

/// min 1/2 x' Phi x + psi' x + constant  s.t.  G x <= d
template <typename Scalar>
class QPProblem {
 public:
  QPProblem(MatrixX<Scalar> phi, VectorX<Scalar> psi, MatrixX<Scalar> g, VectorX<Scalar> d, Scalar constant = 0)
      : phi_(std::move(phi)), psi_(std::move(psi)), g_(std::move(g)), d_(std::move(d)), constant_(constant) {
    const Eigen::Index hm = psi_.size();
    require(hm >= 1, "QPProblem: empty decision vector");
    require(phi_.rows() == hm && phi_.cols() == hm, "QPProblem: phi shape");
    require(g_.cols() == hm || g_.rows() == 0, "QPProblem: constraint matrix width");
    require(g_.rows() == d_.size(), "QPProblem: constraint rows must match bounds");
    require(phi_.allFinite() && psi_.allFinite() && g_.allFinite() && !d_.hasNaN(), "QPProblem: non-finite data");
    const Scalar scale = std::max(Scalar(1), phi_.cwiseAbs().maxCoeff());
    require((phi_ - phi_.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-10) * scale, "QPProblem: phi not symmetric");
    symmetrize(phi_);
    if (g_.rows() == 0) g_.resize(0, hm);
    llt_.compute(phi_);
    require(llt_.info() == Eigen::Success, "QPProblem: phi not positive definite");
    require(llt_.matrixL().toDenseMatrix().diagonal().minCoeff() > Scalar(0), "QPProblem: phi not positive definite");
  }

  Eigen::Index dim() const { return psi_.size(); }
  Eigen::Index rows() const { return g_.rows(); }
  const MatrixX<Scalar>& phi() const { return phi_; }
  const VectorX<Scalar>& psi() const { return psi_; }
  const MatrixX<Scalar>& g() const { return g_; }
  const VectorX<Scalar>& bounds() const { return d_; }
  Scalar constant() const { return constant_; }
  /// Cholesky factor of phi, shared by every solve on this problem.
  const Eigen::LLT<MatrixX<Scalar>>& phi_llt() const { return llt_; }

  Scalar objective(const VectorX<Scalar>& x) const { return Scalar(0.5) * x.dot(phi_ * x) + psi_.dot(x) + constant_; }
  /// Largest constraint violation max_i (G_i x - d_i), or -inf with no rows.
  Scalar max_violation(const VectorX<Scalar>& x) const {
    if (rows() == 0) return -std::numeric_limits<Scalar>::infinity();
    return (g_ * x - d_).maxCoeff();
  }

  /// Same problem with a different linear term.
  QPProblem with_psi(VectorX<Scalar> psi) const {
    QPProblem copy = *this;
    require(psi.size() == dim(), "QPProblem: psi size");
    copy.psi_ = std::move(psi);
    return copy;
  }

 private:
  MatrixX<Scalar> phi_;
  VectorX<Scalar> psi_;
  MatrixX<Scalar> g_;
  VectorX<Scalar> d_;
  Scalar constant_;
  Eigen::LLT<MatrixX<Scalar>> llt_;
};

/// Constraint rows treated as equalities, in insertion order.
class WorkingSet {
 public:
  WorkingSet() = default;
  explicit WorkingSet(std::vector<Eigen::Index> indices) {
    for (Eigen::Index i : indices) add(i);
  }

  bool contains(Eigen::Index i) const { return std::find(idx_.begin(), idx_.end(), i) != idx_.end(); }
  void add(Eigen::Index i) {
    require(i >= 0, "WorkingSet: negative index");
    require(!contains(i), "WorkingSet: duplicate index");
    idx_.push_back(i);
  }
  void remove(Eigen::Index i) {
    auto it = std::find(idx_.begin(), idx_.end(), i);
    require(it != idx_.end(), "WorkingSet: index not present");
    idx_.erase(it);
  }
  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }
  const std::vector<Eigen::Index>& indices() const { return idx_; }
  std::vector<Eigen::Index> sorted() const {
    auto s = idx_;
    std::sort(s.begin(), s.end());
    return s;
  }
  bool valid_for(Eigen::Index rows) const {
    return std::all_of(idx_.begin(), idx_.end(), [&](Eigen::Index i) { return i < rows; });
  }

 private:
  std::vector<Eigen::Index> idx_;
};

// Structured text dump: a dims header followed by row-major matrices.
void dump(std::ostream& out, const QPProblem<double>& qp);
QPProblem<double> load(std::istream& in);
void dump_file(const std::string& path, const QPProblem<double>& qp);
QPProblem<double> load_file(const std::string& path);

}  // namespace gpmpc::qp
