#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/numerics/cg.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/lanczos.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"
#include "bbcouple/reduction/multiplier_space.hpp"
#include "bbcouple/reduction/preconditioner.hpp"

namespace bbcouple {

struct ReducedConfig {
  double tol = tol::residual;
  std::size_t max_iter = 0;  // 0: 10 * dim of the deflated space
  // Run a randomized Lanczos probe of coercivity on ker G^T before solving.
  bool coercivity_probe = true;
  std::uint64_t seed = 0;
};

struct CoercivityReport {
  bool coercive = false;
  double min_ritz = 0.0;
  double max_ritz = 0.0;
  std::size_t iterations = 0;
  std::string failure;
};

struct ReducedSolution {
  Vector lambda;
  Vector z_star;
  BlockVector u_blocks;
  std::size_t iterations = 0;
  std::optional<double> condition_estimate;
  std::vector<double> residual_history;
  CgHistory history;
  double constraint_residual = 0.0;   // |G^T lambda + <f,Z>| relative
  double continuity_residual = 0.0;   // |B u| / |g|
  double deflation_defect = 0.0;      // max over iterates of |G^T x| / |x|
  std::optional<CoercivityReport> coercivity;
};

namespace detail {

inline LinearOperator deflated_schur(const CoupledProblem& p, const MultiplierSpace& s) {
  return [&p, &s](const Vector& x) { return lift_representative(s, apply_schur(p, x)); };
}

// Riesz map of sigma restricted to ker G^T: Pi_sigma Sigma^-1 Pi_sigma^T.
inline LinearOperator deflated_riesz(const MultiplierSpace& s) {
  return [&s](const Vector& r) { return project_sigma(s, s.sigma_solve(lift_representative(s, r))); };
}

inline double relative(double num, double scale) {
  if (scale == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / scale;
}

}  // namespace detail

/// Spectral probe of s_h on ker G^T in the sigma metric: CG with a random
/// right-hand side, then Lanczos. A null or near-null direction shows up as
/// a curvature breakdown, a stall, or a negligible smallest Ritz value.
inline CoercivityReport probe_coercivity(const CoupledProblem& p, const MultiplierSpace& s,
                                         std::uint64_t seed, std::size_t max_iter = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector rho(s.dim);
  for (double& v : rho) v = normal(rng);
  const Vector rhs = lift_representative(s, rho);
  CgOptions opt;
  opt.tol = tol::residual;
  opt.max_iter = max_iter > 0 ? max_iter : 2 * s.deflated_dim() + 10;
  const CgResult run = cg_run(detail::deflated_schur(p, s), detail::deflated_riesz(s), rhs, opt);
  CoercivityReport rep;
  rep.iterations = run.iterations;
  if (!run.history.alphas.empty() && (run.history.alphas.size() >= 2 || run.history.converged)) {
    const auto est = lanczos_condition_estimate(run.history);
    rep.min_ritz = est.lambda_min;
    rep.max_ritz = est.lambda_max;
  }
  if (run.failure) {
    rep.failure = std::string(to_string(*run.failure)) + ": " + run.failure_message;
    rep.coercive = false;
  } else if (!(rep.min_ritz > tol::coercivity * rep.max_ritz)) {
    rep.failure = "smallest Ritz value negligible";
    rep.coercive = false;
  } else {
    rep.coercive = true;
  }
  return rep;
}

/// Solves the reduced multiplier problem by deflated PCG:
///   lambda = lambda0 + lambda_hat, lambda_hat in ker G^T,
/// recovers z* by sigma-weighted least squares and reconstructs
/// u = A+_h (f + B^T lambda) + Z z*.
///
/// Pass precond = nullptr for the plain (sigma-Riesz) iteration.
inline ReducedSolution solve_reduced(const CoupledProblem& p, const MultiplierSpace& s,
                                     const PreconditionerData* precond, const ReducedConfig& cfg = {}) {
  ReducedSolution out;
  if (cfg.coercivity_probe) {
    out.coercivity = probe_coercivity(p, s, cfg.seed);
    if (!out.coercivity->coercive) {
      throw Error(ErrorCode::indefinite_operator,
                  "s_h is not coercive on ker G^T (" + out.coercivity->failure +
                      "); the multiplier space is too rich for the primal mesh");
    }
  }

  const Vector g = assemble_g(p);
  const Vector compat = kernel_compatibility_rhs(p);  // -<f, z_j>
  const Vector f_z = scaled(-1.0, compat);
  const Vector lambda0 = compute_lambda0(s, f_z);
  const Vector rhs = lift_representative(s, subtract(g, apply_schur(p, lambda0)));

  LinearOperator prec;
  if (precond != nullptr) {
    prec = [&](const Vector& r) { return apply_preconditioner(p, *precond, s, r); };
  } else {
    prec = detail::deflated_riesz(s);
  }

  CgOptions opt;
  opt.tol = cfg.tol;
  opt.max_iter = cfg.max_iter > 0 ? cfg.max_iter : 10 * std::max<std::size_t>(s.deflated_dim(), 1);
  const double g_scale = s.G.cols() > 0 ? s.G.max_abs() : 0.0;
  opt.on_iterate = [&](std::size_t, const Vector& x) {
    if (s.kernel_dim() == 0) return;
    const double nx = norm_inf(x);
    if (nx == 0.0) return;
    const double defect = norm_inf(s.G.transpose_multiply(x)) / (g_scale * nx);
    out.deflation_defect = std::max(out.deflation_defect, defect);
  };

  CgResult run = cg_solve(detail::deflated_schur(p, s), prec, rhs, opt);
  out.iterations = run.iterations;
  out.residual_history = std::move(run.residual_history);
  out.history = std::move(run.history);

  out.lambda = add(lambda0, run.x);
  const Vector s_lambda = apply_schur(p, out.lambda);
  const Vector mismatch = subtract(g, s_lambda);
  out.z_star = s.kernel_dim() > 0 ? s.coarse.solve(s.sigma_inv_G.transpose_multiply(mismatch)) : Vector{};
  out.u_blocks = reconstruct(p, out.lambda, out.z_star);

  if (s.kernel_dim() > 0) {
    const Vector gl = s.G.transpose_multiply(out.lambda);
    const double scale = std::max(norm_inf(compat), g_scale * norm_inf(out.lambda));
    out.constraint_residual = detail::relative(norm_inf(subtract(gl, compat)), scale);
  }
  out.continuity_residual = detail::relative(norm2(apply_B(p, out.u_blocks)), norm2(g));
  if (out.history.alphas.size() >= 2 || (out.history.converged && !out.history.alphas.empty())) {
    out.condition_estimate = lanczos_condition_estimate(out.history).kappa;
  }
  return out;
}

/// Lanczos estimate of kappa(M-hat S-hat_h) from a finished solve.
inline double estimate_condition(const ReducedSolution& sol) {
  return lanczos_condition_estimate(sol.history).kappa;
}

}  // namespace bbcouple
