#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-row sparse matrix. Built from triplets; duplicates are summed.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets) {
    for (const auto& t : triplets) {
      if (t.row >= rows || t.col >= cols) {
        throw Error(ErrorCode::dimension_mismatch,
                    "triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                        ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
      }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix m(rows, cols);
    for (std::size_t i = 0; i < triplets.size();) {
      const auto [r, c, v0] = triplets[i];
      double v = v0;
      std::size_t j = i + 1;
      while (j < triplets.size() && triplets[j].row == r && triplets[j].col == c) v += triplets[j++].value;
      m.col_idx_.push_back(c);
      m.values_.push_back(v);
      ++m.row_ptr_[r + 1];
      i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  static SparseMatrix from_dense(const DenseMatrix& d, double drop = 0.0) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j)
        if (std::abs(d(i, j)) > drop) t.push_back({i, j, d(i, j)});
    return from_triplets(d.rows(), d.cols(), std::move(t));
  }

  static SparseMatrix diagonal(std::span<const double> diag) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < diag.size(); ++i) t.push_back({i, i, diag[i]});
    return from_triplets(diag.size(), diag.size(), std::move(t));
  }

  static SparseMatrix identity(std::size_t n) { return diagonal(Vector(n, 1.0)); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  double coeff(std::size_t i, std::size_t j) const {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      if (col_idx_[p] == j) return values_[p];
    return 0.0;
  }

  Vector multiply(std::span<const double> x) const {
    require_dims(x.size() == cols_, "SparseMatrix::multiply: length mismatch");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
      y[i] = s;
    }
    return y;
  }

  Vector transpose_multiply(std::span<const double> x) const {
    require_dims(x.size() == rows_, "SparseMatrix::transpose_multiply: length mismatch");
    Vector y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) y[col_idx_[p]] += values_[p] * x[i];
    return y;
  }

  SparseMatrix transpose() const {
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t.push_back({col_idx_[p], i, values_[p]});
    return from_triplets(cols_, rows_, std::move(t));
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) += values_[p];
    return d;
  }

  DenseMatrix multiply(const DenseMatrix& x) const {
    require_dims(x.rows() == cols_, "SparseMatrix * DenseMatrix: inner dimension mismatch");
    DenseMatrix y(rows_, x.cols());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) += values_[p] * x(col_idx_[p], j);
    return y;
  }

  Vector diagonal_entries() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = coeff(i, i);
    return d;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += std::abs(values_[p]);
      m = std::max(m, s);
    }
    return m;
  }

  std::size_t row_nonzeros(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }

  /// max |A - A^T| relative to max |A|.
  double asymmetry() const {
    if (rows_ != cols_) return std::numeric_limits<double>::infinity();
    const double scale = max_abs();
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        worst = std::max(worst, std::abs(values_[p] - coeff(col_idx_[p], i)));
    return worst / scale;
  }

  friend SparseMatrix operator*(double s, SparseMatrix m) {
    for (double& v : m.values_) v *= s;
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace bbcouple
