/// \file cnmpc/errors.hpp
/// \brief Exception types shared by the solver modules.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cnmpc {

/// Raised by lu_factor when a pivot column is exactly zero.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(std::size_t column)
      : std::runtime_error("singular matrix: zero pivot in column " +
                           std::to_string(column)),
        column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Raised when the forward or backward horizon recursion produces a
/// non-finite value.
class DivergedTrajectoryError : public std::runtime_error {
 public:
  DivergedTrajectoryError(const std::string& what_recursion, std::size_t step)
      : std::runtime_error("diverged " + what_recursion + " at horizon step " +
                           std::to_string(step)),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Raised by MINRES when the preconditioner produces a negative inner
/// product, i.e. it is not symmetric positive definite.
class IndefinitePreconditionerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps a failure while evaluating one column of an assembled Jacobian.
class ColumnEvaluationError : public std::runtime_error {
 public:
  ColumnEvaluationError(std::size_t column, const std::string& cause)
      : std::runtime_error("column " + std::to_string(column) + ": " + cause),
        column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

}  // namespace cnmpc
