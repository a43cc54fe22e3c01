#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "bbcouple/numerics/cg.hpp"
#include "bbcouple/numerics/errors.hpp"

namespace bbcouple {

/// Symmetric tridiagonal matrix: diagonal d (n) and off-diagonal e (n-1).
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;
};

/// The Lanczos matrix implied by a CG coefficient history.
inline Tridiagonal lanczos_matrix(const CgHistory& h) {
  const std::size_t k = h.alphas.size();
  Tridiagonal t;
  t.diag.resize(k);
  t.off.resize(k > 0 ? k - 1 : 0);
  for (std::size_t i = 0; i < k; ++i) {
    t.diag[i] = 1.0 / h.alphas[i];
    if (i > 0) t.diag[i] += h.betas[i - 1] / h.alphas[i - 1];
    if (i + 1 < k) t.off[i] = std::sqrt(h.betas[i]) / h.alphas[i];
  }
  return t;
}

namespace detail {

// Number of eigenvalues of t strictly below x (Sturm sequence).
inline std::size_t sturm_count(const Tridiagonal& t, double x) {
  std::size_t count = 0;
  double q = 1.0;
  const double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < t.diag.size(); ++i) {
    const double e2 = i > 0 ? t.off[i - 1] * t.off[i - 1] : 0.0;
    q = t.diag[i] - x - (i > 0 ? e2 / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace detail

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by bisection.
inline std::vector<double> tridiagonal_eigenvalues(const Tridiagonal& t) {
  const std::size_t n = t.diag.size();
  if (n == 0) return {};
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    if (i > 0) radius += std::abs(t.off[i - 1]);
    if (i + 1 < n) radius += std::abs(t.off[i]);
    lo = std::min(lo, t.diag[i] - radius);
    hi = std::max(hi, t.diag[i] + radius);
  }
  const double pad = 1e-14 * std::max(std::abs(lo), std::abs(hi)) + std::numeric_limits<double>::min();
  lo -= pad;
  hi += pad;
  std::vector<double> eig(n);
  for (std::size_t k = 0; k < n; ++k) {
    double a = lo;
    double b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      if (detail::sturm_count(t, mid) > k) b = mid;
      else a = mid;
    }
    eig[k] = 0.5 * (a + b);
  }
  return eig;
}

struct ConditionEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 1.0;
};

/// Extremal Ritz values of the (preconditioned) operator seen by CG.
///
/// Needs at least two iterations, or a single one that terminated the
/// iteration (then the Krylov space is invariant and its one Ritz value is
/// exact).
inline ConditionEstimate lanczos_condition_estimate(const CgHistory& h) {
  const std::size_t k = h.alphas.size();
  if (k == 0 || (k < 2 && !h.converged)) {
    throw Error(ErrorCode::insufficient_history,
                "need at least 2 CG iterations, got " + std::to_string(k));
  }
  const auto eig = tridiagonal_eigenvalues(lanczos_matrix(h));
  ConditionEstimate c;
  c.lambda_min = eig.front();
  c.lambda_max = eig.back();
  c.kappa = c.lambda_max / c.lambda_min;
  return c;
}

}  // namespace bbcouple
