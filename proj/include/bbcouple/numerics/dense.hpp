#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      require_dims(row.size() == c, "from_rows: ragged rows");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  /// n x 1 matrix holding the given column.
  static DenseMatrix column_matrix(std::span<const double> col) {
    DenseMatrix m(col.size(), 1);
    for (std::size_t i = 0; i < col.size(); ++i) m(i, 0) = col[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void set_column(std::size_t j, std::span<const double> c) {
    require_dims(c.size() == rows_, "set_column: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
  }

  Vector multiply(std::span<const double> x) const {
    require_dims(x.size() == cols_, "DenseMatrix::multiply: length mismatch");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = &data_[i * cols_];
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  Vector transpose_multiply(std::span<const double> x) const {
    require_dims(x.size() == rows_, "DenseMatrix::transpose_multiply: length mismatch");
    Vector y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = &data_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) y[j] += r[j] * x[i];
    }
    return y;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    require_dims(a.cols_ == b.rows_, "DenseMatrix product: inner dimension mismatch");
    DenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) {
    require_dims(a.rows_ == b.rows_ && a.cols_ == b.cols_, "DenseMatrix sum: shape mismatch");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }

  friend DenseMatrix operator*(double s, DenseMatrix a) {
    for (double& v : a.data_) v *= s;
    return a;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting. Throws SingularMatrix when a pivot
/// falls below tol::pivot times the largest entry of the input.
class LuFactorization {
 public:
  LuFactorization() = default;

  explicit LuFactorization(DenseMatrix m, ErrorCode on_singular = ErrorCode::singular_matrix)
      : lu_(std::move(m)), perm_(lu_.rows()) {
    require_dims(lu_.rows() == lu_.cols(), "LU: matrix not square");
    const std::size_t n = lu_.rows();
    const double scale = lu_.max_abs();
    const double threshold = tol::pivot * (scale > 0.0 ? scale : 1.0);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      if (best <= threshold) {
        throw Error(on_singular, "pivot " + format_number(best) + " at column " +
                                     std::to_string(k) + " below tolerance");
      }
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
        std::swap(perm_[k], perm_[p]);
      }
      const double inv = 1.0 / lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double l = lu_(i, k) * inv;
        lu_(i, k) = l;
        if (l == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= l * lu_(k, j);
      }
    }
  }

  std::size_t size() const noexcept { return lu_.rows(); }

  Vector solve(std::span<const double> rhs) const {
    const std::size_t n = lu_.rows();
    require_dims(rhs.size() == n, "LU solve: rhs length mismatch");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

/// Cholesky factorization of a symmetric positive definite matrix.
class CholeskyFactorization {
 public:
  CholeskyFactorization() = default;

  explicit CholeskyFactorization(const DenseMatrix& m,
                                 ErrorCode on_failure = ErrorCode::singular_matrix)
      : l_(m.rows(), m.rows()) {
    require_dims(m.rows() == m.cols(), "Cholesky: matrix not square");
    const std::size_t n = m.rows();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(m(i, i)));
    const double threshold = tol::pivot * (scale > 0.0 ? scale : 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      double d = m(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
      if (!(d > threshold)) {
        throw Error(on_failure, "matrix not positive definite (pivot " + format_number(d) +
                                    " at " + std::to_string(j) + ")");
      }
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
        l_(i, j) = s / ljj;
      }
    }
  }

  std::size_t size() const noexcept { return l_.rows(); }

  Vector solve(std::span<const double> rhs) const {
    const std::size_t n = l_.rows();
    require_dims(rhs.size() == n, "Cholesky solve: rhs length mismatch");
    Vector x(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * x[k];
      x[i] = s / l_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * x[k];
      x[i] = s / l_(i, i);
    }
    return x;
  }

 private:
  DenseMatrix l_;
};

/// Solves m x = rhs by LU with partial pivoting.
inline Vector solve_dense(const DenseMatrix& m, std::span<const double> rhs) {
  return LuFactorization(m).solve(rhs);
}

/// Numerical rank of the columns of m by modified Gram-Schmidt: a column whose
/// remainder drops below tol::rank of its original norm is dependent.
inline std::size_t column_rank(const DenseMatrix& m, double rel_tol = tol::rank) {
  std::vector<Vector> basis;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    Vector v = m.column(j);
    const double original = norm2(v);
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) axpy(-dot(q, v), q, v);
    const double rest = norm2(v);
    if (rest > rel_tol * original) {
      for (double& x : v) x /= rest;
      basis.push_back(std::move(v));
    }
  }
  return basis.size();
}

}  // namespace bbcouple
