#pragma once

#include <stdexcept>
#include <string>

namespace cavmatch {

// Exit codes used by the command line front end.
enum class ExitCode : int {
  kSuccess = 0,
  kValidation = 2,
  kBudget = 3,
  kAcceptance = 4,
};

/// Bad input: malformed files, invalid laws, out-of-range parameters.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A solver or construction exceeded its configured size budget.
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical procedure failed to reach its stopping criterion.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class CycleDetectedError : public ValidationError {
 public:
  explicit CycleDetectedError(const std::string& what) : ValidationError(what) {}
};

class InvalidMatchingError : public ValidationError {
 public:
  explicit InvalidMatchingError(const std::string& what) : ValidationError(what) {}
};

class InconsistentMessagesError : public std::runtime_error {
 public:
  explicit InconsistentMessagesError(const std::string& what) : std::runtime_error(what) {}
};

class DecompositionStalledError : public std::runtime_error {
 public:
  explicit DecompositionStalledError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cavmatch
