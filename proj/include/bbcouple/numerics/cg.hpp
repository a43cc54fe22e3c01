#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

/// A linear map given by its action.
using LinearOperator = std::function<Vector(const Vector&)>;

inline LinearOperator identity_operator() {
  return [](const Vector& x) { return x; };
}

/// CG coefficients; enough to rebuild the Lanczos tridiagonal matrix.
struct CgHistory {
  std::vector<double> alphas;
  std::vector<double> betas;
  bool converged = false;
};

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  CgHistory history;
  std::vector<double> residual_history;  // preconditioned relative residuals
  // Set when the iteration stopped without converging.
  std::optional<ErrorCode> failure;
  std::string failure_message;
};

struct CgOptions {
  double tol = tol::residual;
  std::size_t max_iter = 1000;
  // Called after every update of the iterate with (iteration, x).
  std::function<void(std::size_t, const Vector&)> on_iterate;
};

namespace detail {
inline CgResult& fail(CgResult& out, ErrorCode code, std::string message) {
  out.failure = code;
  out.failure_message = std::move(message);
  return out;
}
}  // namespace detail

/// Preconditioned conjugate gradients from a zero initial guess, reporting
/// failure in the result instead of throwing. The coefficient history is
/// kept up to the point of failure.
///
/// Stops when sqrt(r^T z) / sqrt(r0^T z0) <= tol. A search direction with
/// non-positive curvature, or curvature negligible next to the largest seen,
/// is an IndefiniteOperator failure; exhausting max_iter is MaxIterations.
inline CgResult cg_run(const LinearOperator& op, const LinearOperator& precond,
                       const Vector& rhs, const CgOptions& options = {}) {
  CgResult out;
  out.x.assign(rhs.size(), 0.0);
  Vector r = rhs;
  Vector z = precond(r);
  require_dims(z.size() == r.size(), "cg: preconditioner output length mismatch");
  double rz = dot(r, z);
  if (rz < 0.0) return detail::fail(out, ErrorCode::indefinite_operator, "preconditioner is not positive");
  const double rz0 = rz;
  out.residual_history.push_back(1.0);
  if (rz0 == 0.0) {
    out.history.converged = true;
    out.residual_history.back() = 0.0;
    return out;
  }
  Vector p = z;
  double max_rayleigh = 0.0;
  while (true) {
    Vector q = op(p);
    require_dims(q.size() == p.size(), "cg: operator output length mismatch");
    const double pq = dot(p, q);
    const double pp = dot(p, p);
    const double rayleigh = pp > 0.0 ? pq / pp : 0.0;
    if (!(pq > 0.0) || rayleigh <= tol::curvature * max_rayleigh) {
      return detail::fail(out, ErrorCode::indefinite_operator,
                          "non-positive curvature p^T A p = " + format_number(pq) +
                              " at iteration " + std::to_string(out.iterations));
    }
    max_rayleigh = std::max(max_rayleigh, rayleigh);
    const double alpha = rz / pq;
    axpy(alpha, p, out.x);
    axpy(-alpha, q, r);
    ++out.iterations;
    out.history.alphas.push_back(alpha);
    if (options.on_iterate) options.on_iterate(out.iterations, out.x);

    z = precond(r);
    const double rz_new = dot(r, z);
    const double rel = std::sqrt(std::abs(rz_new) / rz0);
    out.residual_history.push_back(rel);
    if (rel <= options.tol) {
      out.history.converged = true;
      return out;
    }
    if (rz_new < 0.0) return detail::fail(out, ErrorCode::indefinite_operator, "preconditioner is not positive");
    if (out.iterations >= options.max_iter) {
      return detail::fail(out, ErrorCode::max_iterations,
                          "no convergence after " + std::to_string(out.iterations) +
                              " iterations (relative residual " + format_number(rel) + ")");
    }
    const double beta = rz_new / rz;
    out.history.betas.push_back(beta);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    rz = rz_new;
  }
}

/// Throwing variant of cg_run.
inline CgResult cg_solve(const LinearOperator& op, const LinearOperator& precond,
                         const Vector& rhs, const CgOptions& options = {}) {
  CgResult out = cg_run(op, precond, rhs, options);
  if (out.failure) {
    throw Error(*out.failure, out.failure_message,
                out.residual_history.empty() ? 1.0 : out.residual_history.back());
  }
  return out;
}

}  // namespace bbcouple
