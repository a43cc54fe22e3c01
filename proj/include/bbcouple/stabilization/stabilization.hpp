#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/numerics/cg.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"
#include "bbcouple/reduction/multiplier_space.hpp"
#include "bbcouple/reduction/solve.hpp"

namespace bbcouple {

/// Auxiliary coarse multiplier space embedded in Lambda_delta by P.
struct CoarseMultiplierSpace {
  std::size_t dim = 0;
  SparseMatrix P;  // fine dim x coarse dim
  double delta_tilde = 0.0;
};

/// Groups consecutive fine cells into coarse cells; group[i] is the coarse
/// index of fine cell i.
inline CoarseMultiplierSpace make_coarse_space(const std::vector<std::size_t>& group, std::size_t coarse_dim,
                                               double delta_tilde) {
  std::vector<Triplet> t;
  std::vector<bool> hit(coarse_dim, false);
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] >= coarse_dim) throw Error(ErrorCode::config_invalid, "coarse group index out of range");
    t.push_back({i, group[i], 1.0});
    hit[group[i]] = true;
  }
  if (std::find(hit.begin(), hit.end(), false) != hit.end()) {
    throw Error(ErrorCode::coarse_singular, "empty coarse multiplier cell; P is not of full column rank");
  }
  return {coarse_dim, SparseMatrix::from_triplets(group.size(), coarse_dim, t), delta_tilde};
}

struct StabilizationForm {
  SparseMatrix sigma;
  SparseMatrix P;
  Vector weights;  // w per fine multiplier dof (delta of its cell)
  double gamma = 1.0;
  CholeskyFactorization coarse_mass;  // P^T Sigma P
  DenseMatrix sigma_P;                // Sigma P

  static StabilizationForm build(const SparseMatrix& sigma, const CoarseMultiplierSpace& coarse, Vector weights,
                                 double gamma = 1.0) {
    require_dims(coarse.P.rows() == sigma.rows(), "coarse prolongation rows must match dim Lambda");
    require_dims(weights.size() == sigma.rows(), "stabilization weights length");
    if (!(gamma > 0.0)) throw Error(ErrorCode::config_invalid, "gamma must be positive");
    for (double w : weights)
      if (!(w > 0.0)) throw Error(ErrorCode::config_invalid, "stabilization weights must be positive");
    StabilizationForm f;
    f.sigma = sigma;
    f.P = coarse.P;
    f.weights = std::move(weights);
    f.gamma = gamma;
    f.sigma_P = sigma.multiply(coarse.P.to_dense());
    const DenseMatrix pt_sigma_p = coarse.P.transpose().multiply(f.sigma_P);
    f.coarse_mass = CholeskyFactorization(pt_sigma_p, ErrorCode::coarse_singular);
    return f;
  }
};

/// pi lambda = P (P^T Sigma P)^-1 P^T Sigma lambda.
inline Vector project_coarse(const StabilizationForm& f, const Vector& lambda) {
  require_dims(lambda.size() == f.sigma.rows(), "project_coarse: length mismatch");
  return f.P.multiply(f.coarse_mass.solve(f.sigma_P.transpose_multiply(lambda)));
}

namespace detail {

// W^1/2 Sigma W^1/2 r
inline Vector weighted_mass(const StabilizationForm& f, const Vector& r) {
  Vector x(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) x[i] = std::sqrt(f.weights[i]) * r[i];
  x = f.sigma.multiply(x);
  for (std::size_t i = 0; i < r.size(); ++i) x[i] *= std::sqrt(f.weights[i]);
  return x;
}

}  // namespace detail

/// j(lambda, mu) = delta <(I - pi) lambda, (I - pi) mu>_L2(skeleton), without gamma.
inline double apply_j(const StabilizationForm& f, const Vector& lambda, const Vector& mu) {
  const Vector rl = subtract(lambda, project_coarse(f, lambda));
  const Vector rm = subtract(mu, project_coarse(f, mu));
  return dot(rl, detail::weighted_mass(f, rm));
}

/// J lambda with j(lambda, mu) = mu^T J lambda.
inline Vector apply_J(const StabilizationForm& f, const Vector& lambda) {
  const Vector y = detail::weighted_mass(f, subtract(lambda, project_coarse(f, lambda)));
  // (I - pi)^T y = y - Sigma P (P^T Sigma P)^-1 P^T y
  return subtract(y, f.sigma_P.multiply(f.coarse_mass.solve(f.P.transpose_multiply(y))));
}

inline DenseMatrix assemble_J(const StabilizationForm& f) {
  const std::size_t m = f.sigma.rows();
  DenseMatrix J(m, m);
  Vector e(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    e[j] = 1.0;
    J.set_column(j, apply_J(f, e));
    e[j] = 0.0;
  }
  return J;
}

/// Solves (S + gamma J) lambda + G z = g, G^T lambda = -<f, Z>, then
/// reconstructs u. Dense block factorization up to tol::dense_limit
/// unknowns, deflated CG beyond.
inline ReducedSolution solve_stabilized(const CoupledProblem& p, const MultiplierSpace& s,
                                        const StabilizationForm& f, const ReducedConfig& cfg = {}) {
  require_dims(f.sigma.rows() == s.dim, "stabilization form does not match the multiplier space");
  const std::size_t m = s.dim;
  const std::size_t nz = s.kernel_dim();
  const Vector g = assemble_g(p);
  const Vector compat = kernel_compatibility_rhs(p);
  ReducedSolution out;

  if (m + nz <= tol::dense_limit) {
    const DenseMatrix S = assemble_schur_dense(p);
    const DenseMatrix J = assemble_J(f);
    DenseMatrix K(m + nz, m + nz);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) K(i, j) = S(i, j) + f.gamma * J(i, j);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < nz; ++j) {
        K(i, m + j) = s.G(i, j);
        K(m + j, i) = s.G(i, j);
      }
    Vector rhs(m + nz);
    std::copy(g.begin(), g.end(), rhs.begin());
    std::copy(compat.begin(), compat.end(), rhs.begin() + static_cast<std::ptrdiff_t>(m));
    Vector x;
    try {
      x = LuFactorization(K, ErrorCode::singular_stabilized_system).solve(rhs);
    } catch (const Error& e) {
      throw Error(ErrorCode::singular_stabilized_system,
                  std::string("stabilized block system is singular; increase gamma (") + e.what() + ")");
    }
    out.lambda.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
    out.z_star.assign(x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
  } else {
    const Vector lambda0 = compute_lambda0(s, scaled(-1.0, compat));
    const LinearOperator op = [&](const Vector& x) {
      Vector y = apply_schur(p, x);
      axpy(f.gamma, apply_J(f, x), y);
      return lift_representative(s, y);
    };
    const Vector r0 = subtract(g, op(lambda0));
    CgOptions opt;
    opt.tol = cfg.tol;
    opt.max_iter = cfg.max_iter > 0 ? cfg.max_iter : 10 * std::max<std::size_t>(s.deflated_dim(), 1);
    CgResult run;
    try {
      run = cg_solve(op, detail::deflated_riesz(s), lift_representative(s, r0), opt);
    } catch (const Error& e) {
      throw Error(ErrorCode::singular_stabilized_system, std::string("stabilized iteration failed: ") + e.what());
    }
    out.iterations = run.iterations;
    out.residual_history = std::move(run.residual_history);
    out.history = std::move(run.history);
    out.lambda = add(lambda0, run.x);
    if (nz > 0) {
      Vector mismatch = subtract(g, apply_schur(p, out.lambda));
      axpy(-f.gamma, apply_J(f, out.lambda), mismatch);
      out.z_star = s.coarse.solve(s.sigma_inv_G.transpose_multiply(mismatch));
    }
  }

  out.u_blocks = reconstruct(p, out.lambda, out.z_star);
  if (nz > 0) {
    const Vector gl = s.G.transpose_multiply(out.lambda);
    const double scale = std::max(norm_inf(compat), s.G.max_abs() * norm_inf(out.lambda));
    out.constraint_residual = detail::relative(norm_inf(subtract(gl, compat)), scale);
  }
  out.continuity_residual = detail::relative(norm2(apply_B(p, out.u_blocks)), norm2(g));
  return out;
}

}  // namespace bbcouple
