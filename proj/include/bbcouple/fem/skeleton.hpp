#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/fem/assemble.hpp"
#include "bbcouple/fem/mesh.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/sparse.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/stabilization/stabilization.hpp"

namespace bbcouple::fem {

/// Straight interface between subdomains lo < hi. In 1D p0 == p1 and the
/// interface carries a single point multiplier.
struct Interface {
  int id = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  Point p0{};
  Point p1{};
  Point normal{};  // unit normal pointing from lo into hi
  std::size_t cell_count = 1;
  std::size_t first_cell = 0;

  double length() const { return std::hypot(p1[0] - p0[0], p1[1] - p0[1]); }
};

/// P0 multipliers on the skeleton, numbered interface by interface.
struct SkeletonSpace {
  int dimension = 1;
  std::vector<Interface> interfaces;
  std::vector<std::size_t> cell_interface;
  std::vector<std::array<double, 2>> cell_param;  // arc-length range on the interface
  std::vector<double> cell_measure;               // length in 2D, 1 for points

  std::size_t dim() const noexcept { return cell_interface.size(); }

  Point point_at(std::size_t iface, double t) const {
    const auto& I = interfaces[iface];
    const double L = I.length();
    if (L == 0.0) return I.p0;
    return {I.p0[0] + t / L * (I.p1[0] - I.p0[0]), I.p0[1] + t / L * (I.p1[1] - I.p0[1])};
  }
};

inline SkeletonSpace make_skeleton(int dimension, std::vector<Interface> interfaces) {
  SkeletonSpace s;
  s.dimension = dimension;
  for (std::size_t i = 0; i < interfaces.size(); ++i) {
    auto& I = interfaces[i];
    if (I.lo >= I.hi) throw Error(ErrorCode::config_invalid, "interface subdomains must satisfy lo < hi");
    if (dimension == 1) I.cell_count = 1;
    if (I.cell_count == 0) {
      throw Error(ErrorCode::config_invalid, "interface " + std::to_string(I.id) + " has no multiplier cells");
    }
    I.first_cell = s.dim();
    const double L = I.length();
    for (std::size_t c = 0; c < I.cell_count; ++c) {
      s.cell_interface.push_back(i);
      const double t0 = L * static_cast<double>(c) / static_cast<double>(I.cell_count);
      const double t1 = L * static_cast<double>(c + 1) / static_cast<double>(I.cell_count);
      s.cell_param.push_back({t0, t1});
      s.cell_measure.push_back(dimension == 1 ? 1.0 : t1 - t0);
    }
  }
  s.interfaces = std::move(interfaces);
  return s;
}

namespace detail {

[[noreturn]] inline void mismatch(const Interface& I, std::size_t k, const std::string& what) {
  throw Error(ErrorCode::interface_mismatch,
              "interface " + std::to_string(I.id) + ", subdomain " + std::to_string(k) + ": " + what);
}

inline void add_side(const SkeletonSpace& s, const Interface& I, std::size_t k, double sign,
                     const SubdomainMesh& mesh, const DofMap& dofs, std::vector<Triplet>& out) {
  const double L = I.length();
  const double scale = std::max(L, 1.0);
  std::vector<const Facet*> facets;
  for (const auto& f : mesh.facets)
    if (f.tag == I.id) facets.push_back(&f);
  if (facets.empty()) mismatch(I, k, "no facets carry this interface tag");

  if (s.dimension == 1) {
    if (facets.size() != 1) mismatch(I, k, "point interface must be a single facet");
    const std::size_t v = facets[0]->vertices[0];
    const Point& x = mesh.vertices[v];
    if (std::hypot(x[0] - I.p0[0], x[1] - I.p0[1]) > tol::geometry * scale) {
      mismatch(I, k, "trace point does not coincide with the interface");
    }
    if (dofs.is_free(v)) out.push_back({I.first_cell, dofs.dof(v), sign});
    return;
  }

  const Point tau{(I.p1[0] - I.p0[0]) / L, (I.p1[1] - I.p0[1]) / L};
  auto param = [&](std::size_t v) {
    const Point& x = mesh.vertices[v];
    const double dx = x[0] - I.p0[0], dy = x[1] - I.p0[1];
    if (std::abs(dx * tau[1] - dy * tau[0]) > tol::geometry * scale) {
      mismatch(I, k, "trace vertex off the interface line");
    }
    return dx * tau[0] + dy * tau[1];
  };
  double covered = 0.0, tmin = L, tmax = 0.0;
  for (const Facet* f : facets) {
    std::size_t va = f->vertices[0], vb = f->vertices[1];
    double ta = param(va), tb = param(vb);
    if (ta > tb) {
      std::swap(ta, tb);
      std::swap(va, vb);
    }
    covered += tb - ta;
    tmin = std::min(tmin, ta);
    tmax = std::max(tmax, tb);
    const double len = tb - ta;
    // Hats restricted to the edge are linear, so the trapezoid rule on each
    // overlap is exact.
    for (std::size_t c = I.first_cell; c < I.first_cell + I.cell_count; ++c) {
      const double lo = std::max(ta, s.cell_param[c][0]);
      const double hi = std::min(tb, s.cell_param[c][1]);
      if (hi <= lo) continue;
      const double pa_lo = (tb - lo) / len, pa_hi = (tb - hi) / len;
      const double ia = 0.5 * (hi - lo) * (pa_lo + pa_hi);
      const double ib = (hi - lo) - ia;
      if (dofs.is_free(va)) out.push_back({c, dofs.dof(va), sign * ia});
      if (dofs.is_free(vb)) out.push_back({c, dofs.dof(vb), sign * ib});
    }
  }
  if (std::abs(covered - L) > tol::geometry * scale || tmin > tol::geometry * scale ||
      std::abs(tmax - L) > tol::geometry * scale) {
    mismatch(I, k, "trace facets do not cover the interface exactly");
  }
}

}  // namespace detail

/// B_k = (nu . nu^k) * int (trace of phi_i) mu_c over each multiplier cell;
/// +1 on the lower-indexed side, -1 on the higher.
inline CouplingMap build_coupling(const std::vector<SubdomainMesh>& meshes, const std::vector<DofMap>& dofs,
                                  const SkeletonSpace& skeleton) {
  require_dims(meshes.size() == dofs.size(), "build_coupling: one dof map per mesh");
  std::vector<std::vector<Triplet>> trip(meshes.size());
  for (const auto& I : skeleton.interfaces) {
    if (I.hi >= meshes.size()) throw Error(ErrorCode::config_invalid, "interface refers to a missing subdomain");
    detail::add_side(skeleton, I, I.lo, +1.0, meshes[I.lo], dofs[I.lo], trip[I.lo]);
    detail::add_side(skeleton, I, I.hi, -1.0, meshes[I.hi], dofs[I.hi], trip[I.hi]);
  }
  CouplingMap map;
  map.multiplier_count = skeleton.dim();
  for (std::size_t k = 0; k < meshes.size(); ++k)
    map.blocks.push_back(SparseMatrix::from_triplets(skeleton.dim(), dofs[k].dof_count(), trip[k]));
  return map;
}

enum class MultiplierScalarProduct { mass, identity };

/// Sigma: diagonal P0 mass (cell measures) or the identity.
inline SparseMatrix multiplier_mass(const SkeletonSpace& s, MultiplierScalarProduct choice) {
  std::vector<Triplet> t;
  for (std::size_t c = 0; c < s.dim(); ++c)
    t.push_back({c, c, choice == MultiplierScalarProduct::mass ? s.cell_measure[c] : 1.0});
  return SparseMatrix::from_triplets(s.dim(), s.dim(), t);
}

/// Coarse P0 space: `factor` consecutive fine cells per coarse cell on every
/// interface, the remainder joining the last coarse cell.
inline CoarseMultiplierSpace coarsen(const SkeletonSpace& s, std::size_t factor) {
  if (factor == 0) throw Error(ErrorCode::config_invalid, "coarsen factor must be positive");
  std::vector<std::size_t> group(s.dim());
  std::size_t coarse = 0;
  double delta_tilde = 0.0;
  for (const auto& I : s.interfaces) {
    const std::size_t n = std::max<std::size_t>(1, I.cell_count / factor);
    for (std::size_t c = 0; c < I.cell_count; ++c) group[I.first_cell + c] = coarse + std::min(c / factor, n - 1);
    coarse += n;
    delta_tilde = std::max(delta_tilde, I.length() / static_cast<double>(n));
  }
  return make_coarse_space(group, coarse, delta_tilde);
}

}  // namespace bbcouple::fem
