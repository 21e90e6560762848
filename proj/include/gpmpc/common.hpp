#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gpmpc {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Error taxonomy. Everything derives from Error so callers can catch broadly.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractViolation : Error {
  using Error::Error;
};

struct IllConditionedKernel : Error {
  using Error::Error;
};

struct DegenerateInput : Error {
  using Error::Error;
};

struct PropagationInstability : Error {
  using Error::Error;
};

struct InvalidCovariance : Error {
  using Error::Error;
};

struct LinearizationFailure : Error {
  LinearizationFailure(const std::string& what, Eigen::Index coordinate)
      : Error(what + " (coordinate " + std::to_string(coordinate) + ")"), coordinate(coordinate) {}
  Eigen::Index coordinate;
};

struct InfeasibleTightening : Error {
  InfeasibleTightening(const std::string& what, Eigen::Index coordinate)
      : Error(what), coordinate(coordinate) {}
  Eigen::Index coordinate;
};

struct UnreachableAttitude : Error {
  using Error::Error;
};

struct SimulationBlowup : Error {
  using Error::Error;
};

struct CollectionAborted : Error {
  CollectionAborted(const std::string& what, std::size_t collected)
      : Error(what), collected(collected) {}
  std::size_t collected;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

/// Writes (M + M^T) / 2 back into M so that M == M^T holds bitwise.
template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
      const auto avg = (m(i, j) + m(j, i)) / 2;
      m(i, j) = avg;
      m(j, i) = avg;
    }
  }
}

}  // namespace gpmpc
