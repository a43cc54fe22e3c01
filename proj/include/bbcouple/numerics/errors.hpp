#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bbcouple {

enum class ErrorCode {
  singular_matrix,
  singular_bordered_system,
  indefinite_operator,
  max_iterations,
  insufficient_history,
  dimension_mismatch,
  coarse_singular,
  singular_stabilized_system,
  degenerate_element,
  interface_mismatch,
  config_invalid,
  io_error,
  solver_contract,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::singular_matrix: return "SingularMatrix";
    case ErrorCode::singular_bordered_system: return "SingularBorderedSystem";
    case ErrorCode::indefinite_operator: return "IndefiniteOperator";
    case ErrorCode::max_iterations: return "MaxIterations";
    case ErrorCode::insufficient_history: return "InsufficientHistory";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::coarse_singular: return "CoarseSingular";
    case ErrorCode::singular_stabilized_system: return "SingularStabilizedSystem";
    case ErrorCode::degenerate_element: return "DegenerateElement";
    case ErrorCode::interface_mismatch: return "InterfaceMismatch";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::solver_contract: return "SolverContract";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. Carries a
/// machine-readable code and, where meaningful, the residual reached when the
/// failure was detected.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        double residual = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        residual_(residual) {}

  ErrorCode code() const noexcept { return code_; }
  double residual() const noexcept { return residual_; }

 private:
  ErrorCode code_;
  double residual_;
};

/// A local solver failure, annotated with the subdomain that raised it.
class SubdomainError : public Error {
 public:
  SubdomainError(const Error& cause, std::size_t subdomain)
      : Error(cause.code(),
              "subdomain " + std::to_string(subdomain) + ": " + cause.what(),
              cause.residual()),
        subdomain_(subdomain) {}

  std::size_t subdomain() const noexcept { return subdomain_; }

 private:
  std::size_t subdomain_;
};

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::dimension_mismatch, what);
}

}  // namespace bbcouple
