#pragma once

#include <stdexcept>
#include <string>

namespace domdec {

// Exit-code classes used by the command-line tool: validation problems map to 2,
// convergence problems to 3.

/// Input or configuration rejected before any numerical work starts.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside a function's mathematical domain (negative mass, q ∉ (0,1), ...).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Inconsistent parameters (cell size not dividing the grid, too few cells, ...).
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Data that violates a structural precondition (mismatched index spaces,
/// infeasible marginal totals, disconnected partition graphs).
class ConsistencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A solver did not reach its stopping criterion.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double lastError)
      : std::runtime_error(what), lastError_(lastError) {}

  double lastError() const noexcept { return lastError_; }

 private:
  double lastError_;
};

}  // namespace domdec
