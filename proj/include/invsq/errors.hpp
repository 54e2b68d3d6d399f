#pragma once

#include <stdexcept>
#include <string>

namespace invsq {

// Failure classes. The CLI maps them onto exit codes
// (config = 2, numerics = 3, non-convergence = 4).

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A computation produced non-finite values or tripped a guard.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iteration or a tail criterion did not converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace invsq
