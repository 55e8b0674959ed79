#pragma once

#include <stdexcept>
#include <string>

namespace chb {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

/// Solver failure: blow-up, non-convergence, singular systems (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Iterative solve stopped at max iterations; carries the best residual reached.
class ConvergenceError : public NumericalError {
public:
  ConvergenceError(const std::string& msg, double best_residual)
      : NumericalError(msg + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

} // namespace chb
