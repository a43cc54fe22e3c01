#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "bbcouple/fem/mesh.hpp"
#include "bbcouple/numerics/errors.hpp"

namespace bbcouple::fem {

/// Closed-form solution of -div(kappa grad u) = f, given per subdomain k.
/// flux(i, x) is the exact multiplier on interface i: nu . kappa grad u
/// seen from the lower-indexed side.
struct ManufacturedCase {
  std::string id;
  std::vector<double> kappa;
  std::function<double(const Point&, std::size_t)> u;
  std::function<Point(const Point&, std::size_t)> grad;
  std::function<double(const Point&, std::size_t)> f;
  std::function<double(std::size_t, const Point&)> flux;

  /// Copy with u, f and the flux multiplied by c.
  ManufacturedCase scaled(double c) const {
    ManufacturedCase s = *this;
    auto u0 = u;
    auto g0 = grad;
    auto f0 = f;
    auto fl0 = flux;
    s.u = [u0, c](const Point& x, std::size_t k) { return c * u0(x, k); };
    s.grad = [g0, c](const Point& x, std::size_t k) {
      const Point g = g0(x, k);
      return Point{c * g[0], c * g[1]};
    };
    s.f = [f0, c](const Point& x, std::size_t k) { return c * f0(x, k); };
    if (fl0) s.flux = [fl0, c](std::size_t i, const Point& x) { return c * fl0(i, x); };
    return s;
  }
};

namespace detail {

inline double uniform_kappa(const std::vector<double>& kappa, const std::string& id) {
  for (double k : kappa)
    if (k != kappa.front()) {
      throw Error(ErrorCode::config_invalid, "manufactured case '" + id + "' needs a uniform kappa");
    }
  return kappa.front();
}

}  // namespace detail

/// 1D cases on (0, 1) split at `breaks` (K+1 points), u(0) = 0.
///   cubic:  u = (x - x^3)/6, f = kappa x
///   const:  u = x(1 - x)/2,  f = kappa
///   sine:   u = sin(pi x),   f = kappa pi^2 sin(pi x)
///   linear: kappa_k u' = 1 on every subdomain, f = 0
///   zero
inline ManufacturedCase chain1d_case(const std::string& id, const std::vector<double>& kappa,
                                     const std::vector<double>& breaks) {
  using std::numbers::pi;
  ManufacturedCase c;
  c.id = id;
  c.kappa = kappa;
  if (id == "linear") {
    std::vector<double> offset(kappa.size(), 0.0);  // u at the left end of subdomain k
    for (std::size_t k = 1; k < kappa.size(); ++k)
      offset[k] = offset[k - 1] + (breaks[k] - breaks[k - 1]) / kappa[k - 1];
    c.u = [kappa, breaks, offset](const Point& x, std::size_t k) { return offset[k] + (x[0] - breaks[k]) / kappa[k]; };
    c.grad = [kappa](const Point&, std::size_t k) { return Point{1.0 / kappa[k], 0.0}; };
    c.f = [](const Point&, std::size_t) { return 0.0; };
    c.flux = [](std::size_t, const Point&) { return 1.0; };
    return c;
  }
  if (id == "zero") {
    c.u = [](const Point&, std::size_t) { return 0.0; };
    c.grad = [](const Point&, std::size_t) { return Point{0.0, 0.0}; };
    c.f = [](const Point&, std::size_t) { return 0.0; };
    c.flux = [](std::size_t, const Point&) { return 0.0; };
    return c;
  }
  const double k0 = detail::uniform_kappa(kappa, id);
  if (id == "cubic") {
    c.u = [](const Point& x, std::size_t) { return (x[0] - x[0] * x[0] * x[0]) / 6.0; };
    c.grad = [](const Point& x, std::size_t) { return Point{(1.0 - 3.0 * x[0] * x[0]) / 6.0, 0.0}; };
    c.f = [k0](const Point& x, std::size_t) { return k0 * x[0]; };
  } else if (id == "const") {
    c.u = [](const Point& x, std::size_t) { return 0.5 * x[0] * (1.0 - x[0]); };
    c.grad = [](const Point& x, std::size_t) { return Point{0.5 - x[0], 0.0}; };
    c.f = [k0](const Point&, std::size_t) { return k0; };
  } else if (id == "sine") {
    c.u = [](const Point& x, std::size_t) { return std::sin(pi * x[0]); };
    c.grad = [](const Point& x, std::size_t) { return Point{pi * std::cos(pi * x[0]), 0.0}; };
    c.f = [k0](const Point& x, std::size_t) { return k0 * pi * pi * std::sin(pi * x[0]); };
  } else {
    throw Error(ErrorCode::config_invalid, "unknown chain1d manufactured case '" + id + "'");
  }
  auto grad = c.grad;
  c.flux = [grad, k0](std::size_t, const Point& x) { return k0 * grad(x, 0)[0]; };
  return c;
}

/// 2D cases on the unit square with uniform kappa.
///   sine:   u = sin(pi x) sin(pi y), f = 2 pi^2 kappa u
///   linear: u = 1 + x + 2y, f = 0
///   zero
/// normals[i] is the unit normal of interface i.
inline ManufacturedCase grid2d_case(const std::string& id, const std::vector<double>& kappa,
                                    const std::vector<Point>& normals) {
  using std::numbers::pi;
  ManufacturedCase c;
  c.id = id;
  c.kappa = kappa;
  const double k0 = detail::uniform_kappa(kappa, id);
  if (id == "sine") {
    c.u = [](const Point& x, std::size_t) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    c.grad = [](const Point& x, std::size_t) {
      return Point{pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), pi * std::sin(pi * x[0]) * std::cos(pi * x[1])};
    };
    c.f = [k0](const Point& x, std::size_t) { return 2.0 * pi * pi * k0 * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  } else if (id == "linear") {
    c.u = [](const Point& x, std::size_t) { return 1.0 + x[0] + 2.0 * x[1]; };
    c.grad = [](const Point&, std::size_t) { return Point{1.0, 2.0}; };
    c.f = [](const Point&, std::size_t) { return 0.0; };
  } else if (id == "zero") {
    c.u = [](const Point&, std::size_t) { return 0.0; };
    c.grad = [](const Point&, std::size_t) { return Point{0.0, 0.0}; };
    c.f = [](const Point&, std::size_t) { return 0.0; };
  } else {
    throw Error(ErrorCode::config_invalid, "unknown grid2d manufactured case '" + id + "'");
  }
  auto grad = c.grad;
  c.flux = [grad, k0, normals](std::size_t i, const Point& x) {
    const Point g = grad(x, 0);
    return k0 * (normals[i][0] * g[0] + normals[i][1] * g[1]);
  };
  return c;
}

/// Closed form of the star network: segment k occupies [-L_k, 0] with
/// u_k(-L_k) = 0, -a_k u_k'' = f_k, and all segments share the junction
/// value U at x = 0.
struct FractureSolution {
  double junction_value = 0.0;
  std::vector<double> flux;  // a_k u_k'(0), outward from segment k into the junction
};

inline FractureSolution fracture_closed_form(const std::vector<double>& a, const std::vector<double>& L,
                                             const std::vector<double>& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += f[k] * L[k] / 2.0;
    den += a[k] / L[k];
  }
  FractureSolution s;
  s.junction_value = num / den;
  for (std::size_t k = 0; k < a.size(); ++k) s.flux.push_back(a[k] * s.junction_value / L[k] - f[k] * L[k] / 2.0);
  return s;
}

/// Interface 0 couples segments (0, 1), interface 1 couples (1, 2).
inline ManufacturedCase fracture_case(const std::vector<double>& a, const std::vector<double>& L,
                                      const std::vector<double>& f) {
  const FractureSolution sol = fracture_closed_form(a, L, f);
  const double U = sol.junction_value;
  ManufacturedCase c;
  c.id = "fracture";
  c.kappa = a;
  c.u = [a, L, f, U](const Point& x, std::size_t k) {
    const double s = x[0] + L[k];
    return U * s / L[k] + f[k] * s * (L[k] - s) / (2.0 * a[k]);
  };
  c.grad = [a, L, f, U](const Point& x, std::size_t k) {
    const double s = x[0] + L[k];
    return Point{U / L[k] + f[k] * (L[k] - 2.0 * s) / (2.0 * a[k]), 0.0};
  };
  c.f = [f](const Point&, std::size_t k) { return f[k]; };
  const auto flux = sol.flux;
  c.flux = [flux](std::size_t i, const Point&) { return i == 0 ? flux[0] : -flux[2]; };
  return c;
}

}  // namespace bbcouple::fem
