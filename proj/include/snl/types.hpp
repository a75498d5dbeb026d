#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace snl {

using Vector = Eigen::VectorXd;
/// A set of points, one per row.
using Points = Eigen::MatrixXd;
using Matrix = Eigen::MatrixXd;

/// Input outside the mathematical domain of an operation (z <= 0, nu <= 0, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shapes or sizes that do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model or objective produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every importance weight underflowed to zero.
class DegenerateProposalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation is not available for this model type.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace snl
