#pragma once

#include <cstddef>

// Relative tolerances shared by the solvers and the test suites.
namespace bbcouple::tol {

inline constexpr double pivot = 1e-14;          // x max|entry|
inline constexpr double kernel_verify = 1e-8;   // |A N| / (|A| |N|)
inline constexpr double residual = 1e-10;
inline constexpr double symmetry = 1e-12;
inline constexpr double rank = 1e-10;
inline constexpr double projector = 1e-12;
inline constexpr double geometry = 1e-12;

// A search direction whose Rayleigh quotient drops below this fraction of the
// largest one seen so far is treated as a null direction of the operator.
inline constexpr double curvature = 1e-12;

// Smallest/largest Ritz value ratio under which the reduced operator is
// declared non-coercive.
inline constexpr double coercivity = 1e-10;

inline constexpr std::size_t dense_limit = 2000;
inline constexpr std::size_t dense_oracle_limit = 500;

}  // namespace bbcouple::tol
