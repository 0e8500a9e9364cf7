#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dphase {

/// Malformed or non-evaluable configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A structural assumption on the data is violated. `condition()` is the anchor
/// of the violated condition, e.g. "eq:gap-z".
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string condition, const std::string& what)
      : std::runtime_error(condition + ": " + what), condition_(std::move(condition)) {}
  const std::string& condition() const noexcept { return condition_; }

 private:
  std::string condition_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Flux evaluation at a point where the requested power is singular.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A numerical procedure could not produce a result (bracketing failed, etc.).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton iteration for an implicit step did not converge.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double time, std::vector<double> residual_trace)
      : std::runtime_error(what), time_(time), trace_(std::move(residual_trace)) {}
  double time() const noexcept { return time_; }
  const std::vector<double>& residual_trace() const noexcept { return trace_; }

 private:
  double time_;
  std::vector<double> trace_;
};

}  // namespace dphase
