#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

/// A possibly singular symmetric core matrix together with a basis of its
/// kernel. The augmented matrix [[core, N], [N^T, 0]] is nonsingular exactly
/// when N spans ker(core).
struct BorderedSystem {
  SparseMatrix core;
  DenseMatrix border;  // n x p, p may be 0

  std::size_t size() const noexcept { return core.rows(); }
  std::size_t kernel_dim() const noexcept { return border.cols(); }
};

struct BorderedSolution {
  Vector x;
  Vector multipliers;
};

/// ||core * N||_max relative to ||core||_max ||N||_max.
inline double kernel_defect(const BorderedSystem& sys) {
  if (sys.kernel_dim() == 0) return 0.0;
  const double scale = sys.core.max_abs() * sys.border.max_abs();
  if (scale == 0.0) return 0.0;
  return sys.core.multiply(sys.border).max_abs() / scale;
}

/// Checks the structural preconditions of a bordered system: square symmetric
/// core, border with matching row count and independent columns.
inline void validate(const BorderedSystem& sys) {
  require_dims(sys.core.rows() == sys.core.cols(), "bordered core must be square");
  if (sys.kernel_dim() > 0) {
    require_dims(sys.border.rows() == sys.size(), "border row count must match core");
    if (column_rank(sys.border) != sys.kernel_dim()) {
      throw Error(ErrorCode::singular_bordered_system, "kernel basis columns are linearly dependent");
    }
  }
}

/// Factorizes the augmented system once; each solve returns the
/// kernel-orthogonal solution x (N^T x = 0) and the multipliers mu with
/// core x + N mu = rhs.
class BorderedSolver {
 public:
  BorderedSolver() = default;

  explicit BorderedSolver(const BorderedSystem& sys) : n_(sys.size()), p_(sys.kernel_dim()) {
    validate(sys);
    DenseMatrix aug(n_ + p_, n_ + p_);
    const auto rp = sys.core.row_ptr();
    const auto ci = sys.core.col_idx();
    const auto vals = sys.core.values();
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t q = rp[i]; q < rp[i + 1]; ++q) aug(i, ci[q]) += vals[q];
    // Scale the border so that its entries are commensurate with the core;
    // the augmented pivots then stay well above the relative tolerance.
    const double core_scale = sys.core.max_abs();
    const double border_scale = sys.border.max_abs();
    scale_ = (p_ > 0 && border_scale > 0.0 && core_scale > 0.0) ? core_scale / border_scale : 1.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < p_; ++j) {
        aug(i, n_ + j) = scale_ * sys.border(i, j);
        aug(n_ + j, i) = scale_ * sys.border(i, j);
      }
    lu_ = LuFactorization(std::move(aug), ErrorCode::singular_bordered_system);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t kernel_dim() const noexcept { return p_; }

  BorderedSolution solve(std::span<const double> rhs) const {
    require_dims(rhs.size() == n_, "bordered solve: rhs length mismatch");
    Vector full(n_ + p_, 0.0);
    std::copy(rhs.begin(), rhs.end(), full.begin());
    Vector sol = lu_.solve(full);
    BorderedSolution out;
    out.x.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n_));
    out.multipliers.assign(sol.begin() + static_cast<std::ptrdiff_t>(n_), sol.end());
    for (double& m : out.multipliers) m *= scale_;
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  double scale_ = 1.0;
  LuFactorization lu_;
};

/// One-shot bordered solve of [[A, N], [N^T, 0]] (x, mu) = (rhs, 0).
inline BorderedSolution solve_bordered(const BorderedSystem& sys, std::span<const double> rhs) {
  return BorderedSolver(sys).solve(rhs);
}

}  // namespace bbcouple
