#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bbcouple/numerics/errors.hpp"

namespace bbcouple::fem {

using Point = std::array<double, 2>;

inline constexpr int kDirichletTag = -1;
inline constexpr int kNeumannTag = -2;

/// Boundary facet: a vertex in 1D, an edge in 2D. Tag is kDirichletTag,
/// kNeumannTag or an interface id >= 0.
struct Facet {
  std::array<std::size_t, 2> vertices{};
  std::size_t vertex_count = 1;
  int tag = kNeumannTag;
};

/// P1 mesh of one subdomain. Elements are intervals (1D, two vertices) or
/// counterclockwise triangles (2D).
struct SubdomainMesh {
  int dimension = 1;
  std::vector<Point> vertices;
  std::vector<std::array<std::size_t, 3>> elements;
  std::vector<Facet> facets;

  std::size_t vertex_count() const noexcept { return vertices.size(); }
  std::size_t element_count() const noexcept { return elements.size(); }
  std::size_t element_vertex_count() const noexcept { return dimension == 1 ? 2 : 3; }

  std::vector<bool> dirichlet_mask() const {
    std::vector<bool> mask(vertices.size(), false);
    for (const auto& f : facets)
      if (f.tag == kDirichletTag)
        for (std::size_t i = 0; i < f.vertex_count; ++i) mask[f.vertices[i]] = true;
    return mask;
  }
};

/// Interval [a, b] with n elements; facets at both ends.
inline SubdomainMesh make_interval_mesh(double a, double b, std::size_t n, int left_tag, int right_tag) {
  if (n == 0) throw Error(ErrorCode::config_invalid, "interval mesh needs at least one element");
  SubdomainMesh m;
  m.dimension = 1;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    m.vertices.push_back({a + t * (b - a), 0.0});
  }
  for (std::size_t e = 0; e < n; ++e) m.elements.push_back({e, e + 1, 0});
  m.facets.push_back({{0, 0}, 1, left_tag});
  m.facets.push_back({{n, 0}, 1, right_tag});
  return m;
}

/// Structured nx x ny quads on [x0,x1]x[y0,y1], each split along its
/// lower-left to upper-right diagonal. side_tags: bottom, right, top, left.
inline SubdomainMesh make_rectangle_mesh(double x0, double x1, double y0, double y1, std::size_t nx, std::size_t ny,
                                         const std::array<int, 4>& side_tags) {
  if (nx == 0 || ny == 0) throw Error(ErrorCode::config_invalid, "rectangle mesh needs at least one cell per side");
  SubdomainMesh m;
  m.dimension = 2;
  auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
      m.vertices.push_back({x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx),
                            y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny)});
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      m.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  for (std::size_t i = 0; i < nx; ++i) m.facets.push_back({{id(i, 0), id(i + 1, 0)}, 2, side_tags[0]});
  for (std::size_t j = 0; j < ny; ++j) m.facets.push_back({{id(nx, j), id(nx, j + 1)}, 2, side_tags[1]});
  for (std::size_t i = 0; i < nx; ++i) m.facets.push_back({{id(i + 1, ny), id(i, ny)}, 2, side_tags[2]});
  for (std::size_t j = 0; j < ny; ++j) m.facets.push_back({{id(0, j + 1), id(0, j)}, 2, side_tags[3]});
  return m;
}

/// Free (non-Dirichlet) vertices numbered consecutively.
struct DofMap {
  std::vector<long> vertex_to_dof;  // -1 for Dirichlet vertices
  std::vector<std::size_t> dof_to_vertex;

  std::size_t dof_count() const noexcept { return dof_to_vertex.size(); }
  bool is_free(std::size_t v) const { return vertex_to_dof[v] >= 0; }
  std::size_t dof(std::size_t v) const { return static_cast<std::size_t>(vertex_to_dof[v]); }
};

inline DofMap make_dof_map(const SubdomainMesh& mesh) {
  const auto mask = mesh.dirichlet_mask();
  DofMap d;
  d.vertex_to_dof.assign(mesh.vertex_count(), -1);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (!mask[v]) {
      d.vertex_to_dof[v] = static_cast<long>(d.dof_to_vertex.size());
      d.dof_to_vertex.push_back(v);
    }
  return d;
}

}  // namespace bbcouple::fem
