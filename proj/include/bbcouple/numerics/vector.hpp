#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bbcouple/numerics/errors.hpp"

namespace bbcouple {

using Vector = std::vector<double>;
using BlockVector = std::vector<Vector>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_dims(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_dims(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector add(std::span<const double> a, std::span<const double> b) {
  require_dims(a.size() == b.size(), "add: length mismatch");
  Vector r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_dims(a.size() == b.size(), "subtract: length mismatch");
  Vector r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline Vector scaled(double alpha, std::span<const double> a) {
  Vector r(a.begin(), a.end());
  for (double& v : r) v *= alpha;
  return r;
}

inline double dot(const BlockVector& a, const BlockVector& b) {
  require_dims(a.size() == b.size(), "block dot: block count mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += dot(a[k], b[k]);
  return s;
}

inline double norm_inf(const BlockVector& a) {
  double m = 0.0;
  for (const auto& blk : a) m = std::max(m, norm_inf(blk));
  return m;
}

inline BlockVector subtract(const BlockVector& a, const BlockVector& b) {
  require_dims(a.size() == b.size(), "block subtract: block count mismatch");
  BlockVector r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = subtract(a[k], b[k]);
  return r;
}

}  // namespace bbcouple
