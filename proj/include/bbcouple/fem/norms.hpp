#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bbcouple/fem/assemble.hpp"
#include "bbcouple/fem/manufactured.hpp"
#include "bbcouple/fem/mesh.hpp"
#include "bbcouple/fem/skeleton.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/vector.hpp"

namespace bbcouple::fem {

/// sqrt(sum_k |u_k - u|^2_H1(subdomain k)); u_blocks hold free-dof values,
/// Dirichlet values are taken from the case.
inline double broken_h1_error(const std::vector<SubdomainMesh>& meshes, const std::vector<LocalOperator>& ops,
                              const BlockVector& u_blocks, const ManufacturedCase& mc) {
  require_dims(meshes.size() == u_blocks.size() && ops.size() == u_blocks.size(), "broken_h1_error: block count");
  double sum = 0.0;
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    const auto& mesh = meshes[k];
    const Vector uv =
        vertex_values(mesh, ops[k], u_blocks[k], [&mc, k](const Point& x) { return mc.u(x, k); });
    const auto& rule = element_rule(mesh);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      const auto g = element_geometry(mesh, e);
      Point gh{0.0, 0.0};
      for (std::size_t a = 0; a < g.nv; ++a) {
        gh[0] += uv[g.v[a]] * g.grad[a][0];
        gh[1] += uv[g.v[a]] * g.grad[a][1];
      }
      for (const auto& q : rule) {
        const Point ge = mc.grad(g.map(q.bary), k);
        const double dx = gh[0] - ge[0], dy = gh[1] - ge[1];
        sum += q.weight * g.measure * (dx * dx + dy * dy);
      }
    }
  }
  return std::sqrt(sum);
}

/// sqrt(sum_cells delta_c (lambda_c - mean of the exact flux over c)^2).
inline double multiplier_error(const SkeletonSpace& s, const Vector& lambda, const ManufacturedCase& mc) {
  require_dims(lambda.size() == s.dim(), "multiplier_error: length mismatch");
  double sum = 0.0;
  const auto& rule = interval_rule();
  for (std::size_t c = 0; c < s.dim(); ++c) {
    const std::size_t i = s.cell_interface[c];
    double mean = 0.0;
    if (s.dimension == 1) {
      mean = mc.flux(i, s.interfaces[i].p0);
    } else {
      const auto [t0, t1] = s.cell_param[c];
      for (const auto& q : rule) mean += q.weight * mc.flux(i, s.point_at(i, q.bary[0] * t0 + q.bary[1] * t1));
    }
    const double d = lambda[c] - mean;
    sum += s.cell_measure[c] * d * d;
  }
  return std::sqrt(sum);
}

}  // namespace bbcouple::fem
