#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "bbcouple/numerics/bordered.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

/// Type-erased local solver: maps a local dual vector g to a primal vector
/// orthogonal to the local kernel. Calls on one solver are serialized.
class BlackBoxSolver {
 public:
  using ApplyFn = std::function<Vector(std::span<const double>)>;

  BlackBoxSolver() = default;
  BlackBoxSolver(ApplyFn fn, std::size_t dof_count)
      : fn_(std::move(fn)), dof_count_(dof_count), mutex_(std::make_shared<std::mutex>()) {}

  std::size_t dof_count() const noexcept { return dof_count_; }
  explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

  Vector apply(std::span<const double> g) const {
    require_dims(g.size() == dof_count_, "black-box solver: input length mismatch");
    std::lock_guard lock(*mutex_);
    Vector x = fn_(g);
    require_dims(x.size() == dof_count_, "black-box solver: output length mismatch");
    return x;
  }

 private:
  ApplyFn fn_;
  std::size_t dof_count_ = 0;
  std::shared_ptr<std::mutex> mutex_;
};

/// One subdomain: stiffness A_k, load f_k, kernel basis of A_k and a
/// black-box pseudo-inverse.
struct LocalSubproblem {
  std::size_t index = 0;
  SparseMatrix stiffness;
  Vector load;
  DenseMatrix kernel_basis;  // dof_count x dim ker, possibly zero columns
  BlackBoxSolver solver;
  // Diagonal of the scalar product d on this block; empty means identity.
  Vector d_weights;

  std::size_t dof_count() const noexcept { return stiffness.rows(); }
  std::size_t kernel_dim() const noexcept { return kernel_basis.cols(); }
};

/// Reference black-box solver: the Galerkin pseudo-inverse realized by a
/// bordered solve with the kernel basis as border. The augmented system is
/// factorized once.
inline BlackBoxSolver galerkin_pseudo_inverse(const SparseMatrix& stiffness,
                                              const DenseMatrix& kernel_basis) {
  if (stiffness.asymmetry() > tol::symmetry) {
    throw Error(ErrorCode::solver_contract, "Galerkin pseudo-inverse needs a symmetric stiffness");
  }
  BorderedSystem sys{stiffness, kernel_basis};
  if (kernel_defect(sys) > tol::kernel_verify) {
    throw Error(ErrorCode::singular_bordered_system, "kernel basis is not in the kernel of the stiffness",
                kernel_defect(sys));
  }
  auto solver = std::make_shared<const BorderedSolver>(sys);
  return BlackBoxSolver(
      [solver](std::span<const double> g) { return solver->solve(g).x; }, stiffness.rows());
}

struct ContractReport {
  double kernel_orthogonality = 0.0;  // max |N^T A+ g| / (|N| |A+ g|)
  double linearity = 0.0;             // |A+(a g1 + b g2) - a A+ g1 - b A+ g2| relative
  double range_identity = 0.0;        // |A A+ g - g| / |g| for g in Range(A)
  bool ok(double tolerance = tol::residual) const {
    return kernel_orthogonality <= tolerance && linearity <= tolerance && range_identity <= tolerance;
  }
};

/// Randomized conformance probes of the black-box contract on one subproblem.
inline ContractReport check_solver_contract(const LocalSubproblem& sub, std::uint64_t seed,
                                            int probes = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const std::size_t n = sub.dof_count();
  auto random_vec = [&] {
    Vector v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };
  ContractReport rep;
  for (int p = 0; p < probes; ++p) {
    const Vector g1 = random_vec();
    const Vector g2 = random_vec();
    const double a = dist(rng);
    const double b = dist(rng);
    const Vector x1 = sub.solver.apply(g1);
    const Vector x2 = sub.solver.apply(g2);
    Vector g12(n);
    for (std::size_t i = 0; i < n; ++i) g12[i] = a * g1[i] + b * g2[i];
    Vector lin = sub.solver.apply(g12);
    for (std::size_t i = 0; i < n; ++i) lin[i] -= a * x1[i] + b * x2[i];
    const double scale = std::abs(a) * norm2(x1) + std::abs(b) * norm2(x2);
    if (scale > 0.0) rep.linearity = std::max(rep.linearity, norm2(lin) / scale);

    if (sub.kernel_dim() > 0 && norm2(x1) > 0.0) {
      const Vector proj = sub.kernel_basis.transpose_multiply(x1);
      rep.kernel_orthogonality =
          std::max(rep.kernel_orthogonality, norm_inf(proj) / (sub.kernel_basis.max_abs() * norm2(x1)));
    }

    const Vector g = sub.stiffness.multiply(random_vec());
    if (norm2(g) > 0.0) {
      const Vector back = sub.stiffness.multiply(sub.solver.apply(g));
      rep.range_identity = std::max(rep.range_identity, norm2(subtract(back, g)) / norm2(g));
    }
  }
  return rep;
}

}  // namespace bbcouple
