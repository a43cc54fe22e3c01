#pragma once

#include <cstddef>
#include <memory>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

/// Lambda_delta with its scalar product sigma (Riesz matrix Sigma), the
/// kernel coupling G and the factorized coarse matrix G^T Sigma^-1 G.
struct MultiplierSpace {
  std::size_t dim = 0;
  SparseMatrix sigma;
  CholeskyFactorization sigma_factor;
  DenseMatrix G;
  DenseMatrix sigma_inv_G;  // Sigma^-1 G
  CholeskyFactorization coarse;

  std::size_t kernel_dim() const noexcept { return G.cols(); }
  std::size_t deflated_dim() const noexcept { return dim - kernel_dim(); }

  static MultiplierSpace build(const CoupledProblem& p) {
    MultiplierSpace s;
    s.dim = p.multiplier_count();
    s.sigma = p.multiplier_mass;
    s.sigma_factor = CholeskyFactorization(s.sigma.to_dense());
    s.G = assemble_G(p);
    s.sigma_inv_G = DenseMatrix(s.dim, s.G.cols());
    for (std::size_t j = 0; j < s.G.cols(); ++j) s.sigma_inv_G.set_column(j, s.sigma_factor.solve(s.G.column(j)));
    if (s.G.cols() > 0) s.coarse = CholeskyFactorization(s.G.transpose() * s.sigma_inv_G, ErrorCode::coarse_singular);
    return s;
  }

  Vector sigma_solve(const Vector& phi) const { return sigma_factor.solve(phi); }
};

/// Pi_sigma lambda = lambda - Sigma^-1 G (G^T Sigma^-1 G)^-1 G^T lambda,
/// the sigma-orthogonal projection onto ker G^T.
inline Vector project_sigma(const MultiplierSpace& s, const Vector& lambda) {
  require_dims(lambda.size() == s.dim, "project_sigma: length mismatch");
  if (s.kernel_dim() == 0) return lambda;
  const Vector c = s.coarse.solve(s.G.transpose_multiply(lambda));
  return subtract(lambda, s.sigma_inv_G.multiply(c));
}

/// Pi_sigma^T phi: the representative of [phi] with minimal dual sigma-norm.
inline Vector lift_representative(const MultiplierSpace& s, const Vector& phi) {
  require_dims(phi.size() == s.dim, "lift_representative: length mismatch");
  if (s.kernel_dim() == 0) return phi;
  const Vector c = s.coarse.solve(s.sigma_inv_G.transpose_multiply(phi));
  return subtract(phi, s.G.multiply(c));
}

/// Particular multiplier with G^T lambda0 = -f_z, sigma-orthogonal to ker G^T:
/// lambda0 = -Sigma^-1 G (G^T Sigma^-1 G)^-1 f_z. Here f_z holds <f, z_j>.
inline Vector compute_lambda0(const MultiplierSpace& s, const Vector& f_z) {
  require_dims(f_z.size() == s.kernel_dim(), "compute_lambda0: length mismatch");
  if (s.kernel_dim() == 0) return Vector(s.dim, 0.0);
  return scaled(-1.0, s.sigma_inv_G.multiply(s.coarse.solve(f_z)));
}

}  // namespace bbcouple
