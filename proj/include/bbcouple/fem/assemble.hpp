#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "bbcouple/fem/mesh.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple::fem {

using ScalarField = std::function<double(const Point&)>;

struct QuadraturePoint {
  std::array<double, 3> bary;  // barycentric coordinates (third unused in 1D)
  double weight;               // relative to the element measure
};

inline const std::vector<QuadraturePoint>& interval_rule() {
  static const std::vector<QuadraturePoint> rule = [] {
    const double s = std::sqrt(3.0 / 5.0);
    std::vector<QuadraturePoint> r;
    for (auto [xi, w] : {std::pair{-s, 5.0 / 9.0}, std::pair{0.0, 8.0 / 9.0}, std::pair{s, 5.0 / 9.0}}) {
      const double t = 0.5 * (1.0 + xi);
      r.push_back({{1.0 - t, t, 0.0}, 0.5 * w});
    }
    return r;
  }();
  return rule;
}

// Degree 4, 6 points.
inline const std::vector<QuadraturePoint>& triangle_rule() {
  static const std::vector<QuadraturePoint> rule = [] {
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    return std::vector<QuadraturePoint>{
        {{a, a, 1.0 - 2.0 * a}, wa}, {{a, 1.0 - 2.0 * a, a}, wa}, {{1.0 - 2.0 * a, a, a}, wa},
        {{b, b, 1.0 - 2.0 * b}, wb}, {{b, 1.0 - 2.0 * b, b}, wb}, {{1.0 - 2.0 * b, b, b}, wb},
    };
  }();
  return rule;
}

/// Geometry of one P1 element: measure and constant basis gradients.
struct ElementGeometry {
  std::array<std::size_t, 3> v{};
  std::size_t nv = 2;
  double measure = 0.0;
  std::array<Point, 3> grad{};
  std::array<Point, 3> x{};

  Point map(const std::array<double, 3>& bary) const {
    Point p{0.0, 0.0};
    for (std::size_t a = 0; a < nv; ++a) {
      p[0] += bary[a] * x[a][0];
      p[1] += bary[a] * x[a][1];
    }
    return p;
  }
};

inline ElementGeometry element_geometry(const SubdomainMesh& mesh, std::size_t e) {
  ElementGeometry g;
  g.v = mesh.elements[e];
  g.nv = mesh.element_vertex_count();
  for (std::size_t a = 0; a < g.nv; ++a) g.x[a] = mesh.vertices[g.v[a]];
  if (mesh.dimension == 1) {
    const double h = g.x[1][0] - g.x[0][0];
    const double scale = std::max(std::abs(g.x[0][0]), std::abs(g.x[1][0])) + 1.0;
    if (!(h > tol::geometry * scale)) {
      throw Error(ErrorCode::degenerate_element, "element " + std::to_string(e) + " has non-positive length");
    }
    g.measure = h;
    g.grad[0] = {-1.0 / h, 0.0};
    g.grad[1] = {1.0 / h, 0.0};
    return g;
  }
  const double x10 = g.x[1][0] - g.x[0][0], y10 = g.x[1][1] - g.x[0][1];
  const double x20 = g.x[2][0] - g.x[0][0], y20 = g.x[2][1] - g.x[0][1];
  const double det = x10 * y20 - x20 * y10;
  const double scale = std::max({x10 * x10 + y10 * y10, x20 * x20 + y20 * y20, 1e-300});
  if (!(det > tol::geometry * scale)) {
    throw Error(ErrorCode::degenerate_element, "element " + std::to_string(e) + " has non-positive area");
  }
  g.measure = 0.5 * det;
  g.grad[1] = {y20 / det, -x20 / det};
  g.grad[2] = {-y10 / det, x10 / det};
  g.grad[0] = {-g.grad[1][0] - g.grad[2][0], -g.grad[1][1] - g.grad[2][1]};
  return g;
}

inline const std::vector<QuadraturePoint>& element_rule(const SubdomainMesh& mesh) {
  return mesh.dimension == 1 ? interval_rule() : triangle_rule();
}

/// Stiffness on free dofs plus the free-to-Dirichlet coupling needed for lifting.
struct LocalOperator {
  DofMap dofs;
  SparseMatrix stiffness;
  DenseMatrix kernel_basis;
  SparseMatrix dirichlet_coupling;  // free dofs x vertices, nonzero on Dirichlet columns only
};

/// P1 stiffness of kappa * grad u . grad v with Dirichlet vertices eliminated.
/// The kernel basis is the constant vector iff no vertex is Dirichlet.
inline LocalOperator assemble_local(const SubdomainMesh& mesh, double kappa) {
  if (!(kappa > 0.0)) throw Error(ErrorCode::config_invalid, "kappa must be positive");
  LocalOperator op;
  op.dofs = make_dof_map(mesh);
  std::vector<Triplet> k, kd;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto g = element_geometry(mesh, e);
    for (std::size_t a = 0; a < g.nv; ++a) {
      if (!op.dofs.is_free(g.v[a])) continue;
      for (std::size_t b = 0; b < g.nv; ++b) {
        const double val = kappa * g.measure * (g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1]);
        if (op.dofs.is_free(g.v[b])) {
          k.push_back({op.dofs.dof(g.v[a]), op.dofs.dof(g.v[b]), val});
        } else {
          kd.push_back({op.dofs.dof(g.v[a]), g.v[b], val});
        }
      }
    }
  }
  const std::size_t n = op.dofs.dof_count();
  op.stiffness = SparseMatrix::from_triplets(n, n, k);
  op.dirichlet_coupling = SparseMatrix::from_triplets(n, mesh.vertex_count(), kd);
  if (n == mesh.vertex_count()) {
    op.kernel_basis = DenseMatrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) op.kernel_basis(i, 0) = 1.0;
  } else {
    op.kernel_basis = DenseMatrix(n, 0);
  }
  return op;
}

/// Load on free dofs: int f phi_i minus the lifting of the Dirichlet data g.
inline Vector assemble_load(const SubdomainMesh& mesh, const LocalOperator& op, const ScalarField& f,
                            const ScalarField& dirichlet = {}) {
  Vector load(op.dofs.dof_count(), 0.0);
  const auto& rule = element_rule(mesh);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto g = element_geometry(mesh, e);
    for (const auto& q : rule) {
      const double fq = f(g.map(q.bary)) * q.weight * g.measure;
      for (std::size_t a = 0; a < g.nv; ++a)
        if (op.dofs.is_free(g.v[a])) load[op.dofs.dof(g.v[a])] += fq * q.bary[a];
    }
  }
  if (dirichlet) {
    Vector ud(mesh.vertex_count(), 0.0);
    const auto mask = mesh.dirichlet_mask();
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
      if (mask[v]) ud[v] = dirichlet(mesh.vertices[v]);
    axpy(-1.0, op.dirichlet_coupling.multiply(ud), load);
  }
  return load;
}

/// Row sums of the P1 mass matrix on free dofs.
inline Vector lumped_mass(const SubdomainMesh& mesh, const LocalOperator& op) {
  Vector m(op.dofs.dof_count(), 0.0);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto g = element_geometry(mesh, e);
    const double share = g.measure / static_cast<double>(g.nv);
    for (std::size_t a = 0; a < g.nv; ++a)
      if (op.dofs.is_free(g.v[a])) m[op.dofs.dof(g.v[a])] += share;
  }
  return m;
}

/// Vertex values from free-dof values and Dirichlet data.
inline Vector vertex_values(const SubdomainMesh& mesh, const LocalOperator& op, const Vector& u_free,
                            const ScalarField& dirichlet = {}) {
  require_dims(u_free.size() == op.dofs.dof_count(), "vertex_values: length mismatch");
  Vector u(mesh.vertex_count(), 0.0);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (op.dofs.is_free(v)) {
      u[v] = u_free[op.dofs.dof(v)];
    } else if (dirichlet) {
      u[v] = dirichlet(mesh.vertices[v]);
    }
  }
  return u;
}

}  // namespace bbcouple::fem
