#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/vector.hpp"
#include "bbcouple/reduction/multiplier_space.hpp"

namespace bbcouple {

enum class PrimalScalarProduct {
  weighted,  // per-subproblem d_weights (lumped mass over mesh size for the FEM kit)
  identity,
};

/// Ingredients of the FETI-type preconditioner on V_h = the union of the
/// local discrete spaces: the diagonal scalar product D and the factorized
/// B D^-1 B^T.
struct PreconditionerData {
  std::vector<Vector> d_inverse;
  CholeskyFactorization bdbt;

  static PreconditionerData build(const CoupledProblem& p,
                                  PrimalScalarProduct choice = PrimalScalarProduct::weighted) {
    PreconditionerData d;
    const std::size_t m = p.multiplier_count();
    d.d_inverse.resize(p.subdomain_count());
    DenseMatrix bdbt(m, m);
    for (std::size_t k = 0; k < p.subdomain_count(); ++k) {
      const auto& s = p.subproblems[k];
      Vector dinv(s.dof_count(), 1.0);
      if (choice == PrimalScalarProduct::weighted && !s.d_weights.empty()) {
        require_dims(s.d_weights.size() == s.dof_count(), "d_weights of subdomain " + std::to_string(k));
        for (std::size_t i = 0; i < dinv.size(); ++i) {
          if (!(s.d_weights[i] > 0.0)) {
            throw Error(ErrorCode::config_invalid, "scalar product d must have positive weights");
          }
          dinv[i] = 1.0 / s.d_weights[i];
        }
      }
      // B_k D_k^-1 B_k^T accumulated column by column of B_k^T.
      const SparseMatrix bt = p.coupling.blocks[k].transpose();
      const auto rp = bt.row_ptr();
      const auto ci = bt.col_idx();
      const auto va = bt.values();
      for (std::size_t i = 0; i < bt.rows(); ++i)
        for (std::size_t a = rp[i]; a < rp[i + 1]; ++a)
          for (std::size_t b = rp[i]; b < rp[i + 1]; ++b) bdbt(ci[a], ci[b]) += va[a] * dinv[i] * va[b];
      d.d_inverse[k] = std::move(dinv);
    }
    try {
      d.bdbt = CholeskyFactorization(bdbt);
    } catch (const Error& e) {
      throw Error(e.code(), std::string("B D^-1 B^T is singular; the coupling is not surjective on V_h (") +
                                e.what() + ")");
    }
    return d;
  }
};

/// B_delta^+ phi = D^-1 B^T (B D^-1 B^T)^-1 phi.
inline BlockVector apply_Bdelta_plus(const CoupledProblem& p, const PreconditionerData& d, const Vector& phi) {
  require_dims(phi.size() == p.multiplier_count(), "apply_Bdelta_plus: length mismatch");
  const Vector y = d.bdbt.solve(phi);
  BlockVector v = apply_B_transpose(p, y);
  for (std::size_t k = 0; k < v.size(); ++k)
    for (std::size_t i = 0; i < v[k].size(); ++i) v[k][i] *= d.d_inverse[k][i];
  return v;
}

/// (B_delta^+)^T w = (B D^-1 B^T)^-1 B D^-1 w.
inline Vector apply_Bdelta_plus_transpose(const CoupledProblem& p, const PreconditionerData& d,
                                          const BlockVector& w) {
  BlockVector scaled_w = w;
  for (std::size_t k = 0; k < w.size(); ++k)
    for (std::size_t i = 0; i < w[k].size(); ++i) scaled_w[k][i] *= d.d_inverse[k][i];
  return d.bdbt.solve(apply_B(p, scaled_w));
}

/// M phi = (B_delta^+)^T A_delta B_delta^+ phi.
inline Vector apply_M(const CoupledProblem& p, const PreconditionerData& d, const Vector& phi) {
  BlockVector v = apply_Bdelta_plus(p, d, phi);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = p.subproblems[k].stiffness.multiply(v[k]);
  return apply_Bdelta_plus_transpose(p, d, v);
}

/// M-hat phi = Pi_sigma M Pi_sigma^T phi.
inline Vector apply_preconditioner(const CoupledProblem& p, const PreconditionerData& d,
                                   const MultiplierSpace& s, const Vector& phi) {
  return project_sigma(s, apply_M(p, d, lift_representative(s, phi)));
}

}  // namespace bbcouple
