#pragma once

#include <cstddef>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "bbcouple/coupling/subproblem.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

/// The multiplier pairing: B_k maps dofs of subdomain k to multiplier-dual
/// coefficients, with the orientation signs already folded in.
struct CouplingMap {
  std::size_t multiplier_count = 0;
  std::vector<SparseMatrix> blocks;
};

/// Global kernel basis Z: one column per local kernel vector, supported on a
/// single subdomain.
struct KernelSpace {
  struct Column {
    std::size_t subdomain;
    std::size_t local_column;
  };
  std::vector<Column> columns;

  std::size_t dim() const noexcept { return columns.size(); }
};

inline KernelSpace make_kernel_space(const std::vector<LocalSubproblem>& subs) {
  KernelSpace z;
  for (std::size_t k = 0; k < subs.size(); ++k)
    for (std::size_t j = 0; j < subs[k].kernel_dim(); ++j) z.columns.push_back({k, j});
  return z;
}

/// The coupled system (A, B, f) with its kernel and multiplier scalar
/// product. Immutable once built.
struct CoupledProblem {
  std::vector<LocalSubproblem> subproblems;
  CouplingMap coupling;
  KernelSpace kernel;
  SparseMatrix multiplier_mass;  // Sigma; SPD on the multiplier coefficients
  std::size_t threads = 1;       // >1 fans the local solves out

  std::size_t multiplier_count() const noexcept { return coupling.multiplier_count; }
  std::size_t subdomain_count() const noexcept { return subproblems.size(); }
  std::size_t kernel_dim() const noexcept { return kernel.dim(); }
};

/// Structural checks: block dimensions, symmetry, kernel bases, coupling
/// coverage and dim Z < dim Lambda.
inline void validate(const CoupledProblem& p) {
  const std::size_t m = p.multiplier_count();
  require_dims(p.coupling.blocks.size() == p.subproblems.size(),
               "one coupling block per subdomain expected");
  std::vector<bool> reached(m, false);
  for (std::size_t k = 0; k < p.subproblems.size(); ++k) {
    const auto& s = p.subproblems[k];
    const auto& b = p.coupling.blocks[k];
    require_dims(b.rows() == m && b.cols() == s.dof_count(),
                 "coupling block " + std::to_string(k) + " has wrong shape");
    require_dims(s.load.size() == s.dof_count(), "load of subdomain " + std::to_string(k) + " has wrong length");
    if (s.kernel_dim() > 0)
      require_dims(s.kernel_basis.rows() == s.dof_count(), "kernel basis of subdomain " + std::to_string(k));
    if (s.stiffness.asymmetry() > tol::symmetry) {
      throw Error(ErrorCode::solver_contract, "stiffness of subdomain " + std::to_string(k) + " is not symmetric");
    }
    if (kernel_defect(BorderedSystem{s.stiffness, s.kernel_basis}) > tol::kernel_verify) {
      throw Error(ErrorCode::solver_contract,
                  "kernel basis of subdomain " + std::to_string(k) + " is not annihilated by the stiffness");
    }
    for (std::size_t i = 0; i < m; ++i)
      if (b.row_nonzeros(i) > 0) reached[i] = true;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!reached[i]) {
      throw Error(ErrorCode::dimension_mismatch, "multiplier " + std::to_string(i) + " is not coupled to any subdomain");
    }
  }
  require_dims(p.multiplier_mass.rows() == m && p.multiplier_mass.cols() == m,
               "multiplier scalar product has wrong shape");
  if (p.kernel_dim() >= m && p.kernel_dim() > 0) {
    throw Error(ErrorCode::coarse_singular, "dim Z = " + std::to_string(p.kernel_dim()) +
                                                " is not smaller than dim Lambda = " + std::to_string(m));
  }
}

namespace detail {

// Runs fn(k) for every subdomain, concurrently when requested. Results are
// returned in subdomain order; local failures are annotated with k.
template <class Fn>
auto map_subdomains(const CoupledProblem& p, Fn&& fn) {
  using Result = decltype(fn(std::size_t{0}));
  const std::size_t n = p.subdomain_count();
  std::vector<Result> out(n);
  auto guarded = [&](std::size_t k) {
    try {
      return fn(k);
    } catch (const SubdomainError&) {
      throw;
    } catch (const Error& e) {
      throw SubdomainError(e, k);
    }
  };
  if (p.threads <= 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = guarded(k);
    return out;
  }
  std::vector<std::future<Result>> futures;
  futures.reserve(n);
  for (std::size_t k = 0; k < n; ++k) futures.push_back(std::async(std::launch::async, guarded, k));
  for (std::size_t k = 0; k < n; ++k) out[k] = futures[k].get();
  return out;
}

}  // namespace detail

inline Vector apply_B(const CoupledProblem& p, const BlockVector& v) {
  require_dims(v.size() == p.subdomain_count(), "apply_B: block count mismatch");
  Vector out(p.multiplier_count(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    require_dims(v[k].size() == p.subproblems[k].dof_count(),
                 "apply_B: block " + std::to_string(k) + " has wrong length");
    const Vector part = p.coupling.blocks[k].multiply(v[k]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
  }
  return out;
}

inline BlockVector apply_B_transpose(const CoupledProblem& p, const Vector& mu) {
  require_dims(mu.size() == p.multiplier_count(), "apply_B_transpose: multiplier length mismatch");
  BlockVector out(p.subdomain_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = p.coupling.blocks[k].transpose_multiply(mu);
  return out;
}

/// Applies A+_h blockwise.
inline BlockVector apply_pseudo_inverse(const CoupledProblem& p, const BlockVector& g) {
  require_dims(g.size() == p.subdomain_count(), "pseudo-inverse: block count mismatch");
  return detail::map_subdomains(p, [&](std::size_t k) { return p.subproblems[k].solver.apply(g[k]); });
}

/// s_h applied to lambda: sum_k B_k A+_k B_k^T lambda, matrix-free.
inline Vector apply_schur(const CoupledProblem& p, const Vector& lambda) {
  require_dims(lambda.size() == p.multiplier_count(), "apply_schur: multiplier length mismatch");
  auto local = detail::map_subdomains(p, [&](std::size_t k) {
    const Vector t = p.coupling.blocks[k].transpose_multiply(lambda);
    return p.coupling.blocks[k].multiply(p.subproblems[k].solver.apply(t));
  });
  Vector out(p.multiplier_count(), 0.0);
  for (const auto& part : local)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
  return out;
}

/// g_h = -B A+_h f.
inline Vector assemble_g(const CoupledProblem& p) {
  auto local = detail::map_subdomains(p, [&](std::size_t k) {
    return p.coupling.blocks[k].multiply(p.subproblems[k].solver.apply(p.subproblems[k].load));
  });
  Vector out(p.multiplier_count(), 0.0);
  for (const auto& part : local)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= part[i];
  return out;
}

/// Column j of Z as a block vector.
inline BlockVector kernel_column(const CoupledProblem& p, std::size_t j) {
  BlockVector z(p.subdomain_count());
  for (std::size_t k = 0; k < z.size(); ++k) z[k].assign(p.subproblems[k].dof_count(), 0.0);
  const auto [k, c] = p.kernel.columns.at(j);
  z[k] = p.subproblems[k].kernel_basis.column(c);
  return z;
}

/// G = B restricted to Z, as a dim Lambda x dim Z matrix.
inline DenseMatrix assemble_G(const CoupledProblem& p) {
  DenseMatrix g(p.multiplier_count(), p.kernel_dim());
  for (std::size_t j = 0; j < p.kernel_dim(); ++j) {
    const auto [k, c] = p.kernel.columns[j];
    g.set_column(j, p.coupling.blocks[k].multiply(p.subproblems[k].kernel_basis.column(c)));
  }
  return g;
}

/// Entry j is -<f, z_j>.
inline Vector kernel_compatibility_rhs(const CoupledProblem& p) {
  Vector r(p.kernel_dim());
  for (std::size_t j = 0; j < r.size(); ++j) {
    const auto [k, c] = p.kernel.columns[j];
    r[j] = -dot(p.subproblems[k].load, p.subproblems[k].kernel_basis.column(c));
  }
  return r;
}

/// u = A+_h (f + B^T lambda) + Z z.
inline BlockVector reconstruct(const CoupledProblem& p, const Vector& lambda, const Vector& z_star) {
  require_dims(z_star.size() == p.kernel_dim(), "reconstruct: kernel coefficient length mismatch");
  BlockVector rhs = apply_B_transpose(p, lambda);
  for (std::size_t k = 0; k < rhs.size(); ++k)
    for (std::size_t i = 0; i < rhs[k].size(); ++i) rhs[k][i] += p.subproblems[k].load[i];
  BlockVector u = apply_pseudo_inverse(p, rhs);
  for (std::size_t j = 0; j < z_star.size(); ++j) {
    const auto [k, c] = p.kernel.columns[j];
    axpy(z_star[j], p.subproblems[k].kernel_basis.column(c), u[k]);
  }
  return u;
}

/// Dense S_h by applying the Schur operator to unit vectors. Only meant for
/// oracles and desk-scale direct solves.
inline DenseMatrix assemble_schur_dense(const CoupledProblem& p, std::size_t max_dim = tol::dense_limit) {
  const std::size_t m = p.multiplier_count();
  if (m > max_dim) {
    throw Error(ErrorCode::dimension_mismatch,
                "dense Schur assembly refused for dim " + std::to_string(m) + " > " + std::to_string(max_dim));
  }
  DenseMatrix s(m, m);
  Vector e(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    e[j] = 1.0;
    s.set_column(j, apply_schur(p, e));
    e[j] = 0.0;
  }
  return s;
}

struct MonolithicSolution {
  BlockVector u;
  Vector lambda;
};

/// Direct dense solve of the full saddle point system
///   A u - B^T lambda = f,  B u = 0.
/// Independent of the pseudo-inverses; used as the reference solution.
inline MonolithicSolution solve_monolithic(const CoupledProblem& p) {
  std::vector<std::size_t> offset(p.subdomain_count() + 1, 0);
  for (std::size_t k = 0; k < p.subdomain_count(); ++k) offset[k + 1] = offset[k] + p.subproblems[k].dof_count();
  const std::size_t n = offset.back();
  const std::size_t m = p.multiplier_count();
  DenseMatrix kkt(n + m, n + m);
  Vector rhs(n + m, 0.0);
  for (std::size_t k = 0; k < p.subdomain_count(); ++k) {
    const auto& s = p.subproblems[k];
    const auto rp = s.stiffness.row_ptr();
    const auto ci = s.stiffness.col_idx();
    const auto va = s.stiffness.values();
    for (std::size_t i = 0; i < s.dof_count(); ++i) {
      for (std::size_t q = rp[i]; q < rp[i + 1]; ++q) kkt(offset[k] + i, offset[k] + ci[q]) += va[q];
      rhs[offset[k] + i] = s.load[i];
    }
    const auto& b = p.coupling.blocks[k];
    const auto brp = b.row_ptr();
    const auto bci = b.col_idx();
    const auto bva = b.values();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t q = brp[r]; q < brp[r + 1]; ++q) {
        kkt(n + r, offset[k] + bci[q]) += bva[q];
        kkt(offset[k] + bci[q], n + r) -= bva[q];
      }
  }
  const Vector sol = solve_dense(kkt, rhs);
  MonolithicSolution out;
  out.u.resize(p.subdomain_count());
  for (std::size_t k = 0; k < p.subdomain_count(); ++k)
    out.u[k].assign(sol.begin() + static_cast<std::ptrdiff_t>(offset[k]),
                    sol.begin() + static_cast<std::ptrdiff_t>(offset[k + 1]));
  out.lambda.assign(sol.begin() + static_cast<std::ptrdiff_t>(n), sol.end());
  return out;
}

}  // namespace bbcouple
