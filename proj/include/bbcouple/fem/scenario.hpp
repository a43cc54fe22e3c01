#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/coupling/subproblem.hpp"
#include "bbcouple/fem/assemble.hpp"
#include "bbcouple/fem/manufactured.hpp"
#include "bbcouple/fem/mesh.hpp"
#include "bbcouple/fem/skeleton.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/reduction/preconditioner.hpp"

namespace bbcouple::fem {

struct SolverSettings {
  double tol = 1e-10;
  std::size_t max_iter = 0;
  bool coercivity_probe = true;
};

struct StabilizationSettings {
  bool enabled = false;
  double gamma = 1.0;
  std::size_t coarsen = 3;
};

struct PreconditionerSettings {
  bool enabled = true;
  PrimalScalarProduct d = PrimalScalarProduct::weighted;
  MultiplierScalarProduct sigma = MultiplierScalarProduct::mass;
};

struct ScenarioConfig {
  std::string scenario = "chain1d";   // chain1d | grid2d | fracture_star
  std::vector<std::size_t> subdomains;  // {K} for chain1d, {m, n} for grid2d
  std::optional<double> h;
  std::optional<std::size_t> elements;  // per subdomain and direction; alternative to h
  double ratio = 3.0;                   // delta / h
  std::vector<double> kappa;            // empty: 1, one entry: uniform, else per subdomain
  std::string manufactured;             // default depends on the scenario
  std::vector<double> lengths{1.0, 1.0, 1.0};  // fracture_star
  std::vector<double> loads{1.0, 0.0, 0.0};    // fracture_star
  SolverSettings solver;
  StabilizationSettings stabilization;
  PreconditionerSettings preconditioner;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct Scenario {
  ScenarioConfig config;
  double h = 0.0;
  std::vector<SubdomainMesh> meshes;
  std::vector<LocalOperator> ops;
  SkeletonSpace skeleton;
  ManufacturedCase mcase;
  CoupledProblem problem;

  std::size_t subdomain_count() const noexcept { return meshes.size(); }
};

namespace detail {

[[noreturn]] inline void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::config_invalid, field + ": " + what);
}

inline std::size_t elements_for(const ScenarioConfig& c, double length, const std::string& where) {
  if (c.elements) return *c.elements;
  const double n = length / *c.h;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    invalid("h", "does not divide the " + where + " length " + std::to_string(length));
  }
  return static_cast<std::size_t>(r);
}

inline std::size_t subdomain_total(const ScenarioConfig& c) {
  if (c.scenario == "chain1d") return c.subdomains.at(0);
  if (c.scenario == "grid2d") return c.subdomains.at(0) * c.subdomains.at(1);
  return 3;
}

}  // namespace detail

/// Field-level checks done before any assembly.
inline void validate(const ScenarioConfig& c) {
  using detail::invalid;
  if (c.scenario == "chain1d") {
    if (c.subdomains.size() != 1) invalid("subdomains", "chain1d expects [K]");
    if (c.subdomains[0] < 2) invalid("subdomains", "K must be at least 2");
  } else if (c.scenario == "grid2d") {
    if (c.subdomains.size() != 2) invalid("subdomains", "grid2d expects [m, n]");
    if (c.subdomains[0] < 1 || c.subdomains[1] < 1 || c.subdomains[0] * c.subdomains[1] < 2) {
      invalid("subdomains", "m, n positive with at least two subdomains");
    }
  } else if (c.scenario == "fracture_star") {
    if (!c.subdomains.empty() && (c.subdomains.size() != 1 || c.subdomains[0] != 3)) {
      invalid("subdomains", "fracture_star has exactly three segments");
    }
    if (c.lengths.size() != 3) invalid("lengths", "three segment lengths required");
    if (c.loads.size() != 3) invalid("loads", "three segment loads required");
    for (double l : c.lengths)
      if (!(l > 0.0)) invalid("lengths", "must be positive");
    for (double f : c.loads)
      if (!std::isfinite(f)) invalid("loads", "must be finite");
  } else {
    invalid("scenario", "unknown scenario '" + c.scenario + "'");
  }
  if (c.h.has_value() == c.elements.has_value()) invalid("h", "give exactly one of h and elements");
  if (c.h && !(*c.h > 0.0)) invalid("h", "must be positive");
  if (c.elements && *c.elements == 0) invalid("elements", "must be positive");
  if (!(c.ratio > 0.0)) invalid("ratio", "must be positive");
  const std::size_t K = detail::subdomain_total(c);
  if (c.kappa.size() > 1 && c.kappa.size() != K) invalid("kappa", "one value or one per subdomain");
  for (double k : c.kappa)
    if (!(k > 0.0)) invalid("kappa", "must be positive");
  if (!(c.solver.tol > 0.0)) invalid("solver.tol", "must be positive");
  if (!(c.stabilization.gamma > 0.0)) invalid("stabilization.gamma", "must be positive");
  if (c.stabilization.coarsen == 0) invalid("stabilization.coarsen", "must be positive");
  if (c.threads == 0) invalid("threads", "must be positive");
}

namespace detail {

inline std::vector<double> expand_kappa(const ScenarioConfig& c) {
  const std::size_t K = subdomain_total(c);
  if (c.kappa.empty()) return std::vector<double>(K, 1.0);
  if (c.kappa.size() == 1) return std::vector<double>(K, c.kappa[0]);
  return c.kappa;
}

inline void wire(Scenario& s) {
  const ScenarioConfig& c = s.config;
  std::vector<DofMap> dofs;
  s.problem = CoupledProblem{};
  s.problem.threads = c.threads;
  for (std::size_t k = 0; k < s.meshes.size(); ++k) {
    const auto& mesh = s.meshes[k];
    LocalOperator op = assemble_local(mesh, s.mcase.kappa[k]);
    LocalSubproblem sub;
    sub.index = k;
    sub.stiffness = op.stiffness;
    sub.kernel_basis = op.kernel_basis;
    sub.load = assemble_load(
        mesh, op, [&, k](const Point& x) { return s.mcase.f(x, k); },
        [&, k](const Point& x) { return s.mcase.u(x, k); });
    sub.solver = galerkin_pseudo_inverse(op.stiffness, op.kernel_basis);
    sub.d_weights = lumped_mass(mesh, op);
    for (double& w : sub.d_weights) w /= s.h;
    dofs.push_back(op.dofs);
    s.ops.push_back(std::move(op));
    s.problem.subproblems.push_back(std::move(sub));
  }
  s.problem.coupling = build_coupling(s.meshes, dofs, s.skeleton);
  s.problem.kernel = make_kernel_space(s.problem.subproblems);
  s.problem.multiplier_mass = multiplier_mass(s.skeleton, c.preconditioner.sigma);
  bbcouple::validate(s.problem);
}

inline std::size_t cells_for(std::size_t edges, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(edges) / ratio + 1e-9));
}

inline Scenario build_chain1d(const ScenarioConfig& c) {
  Scenario s;
  s.config = c;
  const std::size_t K = c.subdomains[0];
  const double len = 1.0 / static_cast<double>(K);
  const std::size_t n = elements_for(c, len, "subdomain");
  s.h = len / static_cast<double>(n);
  std::vector<double> breaks(K + 1);
  for (std::size_t k = 0; k <= K; ++k) breaks[k] = static_cast<double>(k) * len;
  breaks[K] = 1.0;
  std::vector<Interface> ifaces;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    Interface I;
    I.id = static_cast<int>(k);
    I.lo = k;
    I.hi = k + 1;
    I.p0 = I.p1 = {breaks[k + 1], 0.0};
    I.normal = {1.0, 0.0};
    ifaces.push_back(I);
  }
  for (std::size_t k = 0; k < K; ++k) {
    const int left = k == 0 ? kDirichletTag : static_cast<int>(k - 1);
    const int right = k + 1 == K ? kDirichletTag : static_cast<int>(k);
    s.meshes.push_back(make_interval_mesh(breaks[k], breaks[k + 1], n, left, right));
  }
  s.skeleton = make_skeleton(1, std::move(ifaces));
  s.mcase = chain1d_case(c.manufactured.empty() ? "cubic" : c.manufactured, expand_kappa(c), breaks);
  wire(s);
  return s;
}

inline Scenario build_grid2d(const ScenarioConfig& c) {
  Scenario s;
  s.config = c;
  const std::size_t m = c.subdomains[0], nn = c.subdomains[1];
  const double wx = 1.0 / static_cast<double>(m), wy = 1.0 / static_cast<double>(nn);
  const std::size_t ex = elements_for(c, wx, "subdomain width");
  const std::size_t ey = elements_for(c, wy, "subdomain height");
  s.h = std::max(wx / static_cast<double>(ex), wy / static_cast<double>(ey));
  auto idx = [m](std::size_t i, std::size_t j) { return j * m + i; };
  std::vector<Interface> ifaces;
  std::vector<int> right_id(m * nn, kDirichletTag), top_id(m * nn, kDirichletTag);
  for (std::size_t j = 0; j < nn; ++j)
    for (std::size_t i = 0; i + 1 < m; ++i) {
      Interface I;
      I.id = static_cast<int>(ifaces.size());
      I.lo = idx(i, j);
      I.hi = idx(i + 1, j);
      const double x = static_cast<double>(i + 1) * wx;
      I.p0 = {x, static_cast<double>(j) * wy};
      I.p1 = {x, static_cast<double>(j + 1) * wy};
      I.normal = {1.0, 0.0};
      I.cell_count = cells_for(ey, c.ratio);
      right_id[idx(i, j)] = I.id;
      ifaces.push_back(I);
    }
  for (std::size_t j = 0; j + 1 < nn; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      Interface I;
      I.id = static_cast<int>(ifaces.size());
      I.lo = idx(i, j);
      I.hi = idx(i, j + 1);
      const double y = static_cast<double>(j + 1) * wy;
      I.p0 = {static_cast<double>(i) * wx, y};
      I.p1 = {static_cast<double>(i + 1) * wx, y};
      I.normal = {0.0, 1.0};
      I.cell_count = cells_for(ex, c.ratio);
      top_id[idx(i, j)] = I.id;
      ifaces.push_back(I);
    }
  for (const auto& I : ifaces)
    if (I.cell_count == 0) detail::invalid("ratio", "leaves an interface without multiplier cells");
  for (std::size_t j = 0; j < nn; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const int bottom = j == 0 ? kDirichletTag : top_id[idx(i, j - 1)];
      const int left = i == 0 ? kDirichletTag : right_id[idx(i - 1, j)];
      s.meshes.push_back(make_rectangle_mesh(static_cast<double>(i) * wx, static_cast<double>(i + 1) * wx,
                                             static_cast<double>(j) * wy, static_cast<double>(j + 1) * wy, ex, ey,
                                             {bottom, right_id[idx(i, j)], top_id[idx(i, j)], left}));
    }
  std::vector<Point> normals;
  for (const auto& I : ifaces) normals.push_back(I.normal);
  s.skeleton = make_skeleton(2, std::move(ifaces));
  s.mcase = grid2d_case(c.manufactured.empty() ? "sine" : c.manufactured, expand_kappa(c), normals);
  wire(s);
  return s;
}

// Segment k lies on [-L_k, 0], Dirichlet at -L_k, all meeting at x = 0.
inline Scenario build_fracture(const ScenarioConfig& c) {
  Scenario s;
  s.config = c;
  if (!c.manufactured.empty() && c.manufactured != "fracture") {
    detail::invalid("manufactured", "fracture_star only supports the closed-form case");
  }
  double hmax = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t n = elements_for(c, c.lengths[k], "segment");
    hmax = std::max(hmax, c.lengths[k] / static_cast<double>(n));
    const int junction_tag = k == 2 ? 1 : 0;
    s.meshes.push_back(make_interval_mesh(-c.lengths[k], 0.0, n, kDirichletTag, junction_tag));
  }
  // Segment 1 touches both interfaces: tag its junction facet with 0 and add a second facet for 1.
  s.meshes[1].facets.push_back({{s.meshes[1].vertex_count() - 1, 0}, 1, 1});
  s.h = hmax;
  std::vector<Interface> ifaces(2);
  for (std::size_t i = 0; i < 2; ++i) {
    ifaces[i].id = static_cast<int>(i);
    ifaces[i].lo = i;
    ifaces[i].hi = i + 1;
    ifaces[i].p0 = ifaces[i].p1 = {0.0, 0.0};
    ifaces[i].normal = {1.0, 0.0};
  }
  s.skeleton = make_skeleton(1, std::move(ifaces));
  s.mcase = fracture_case(expand_kappa(c), c.lengths, c.loads);
  wire(s);
  return s;
}

}  // namespace detail

inline Scenario build_scenario(const ScenarioConfig& config) {
  validate(config);
  if (config.scenario == "chain1d") return detail::build_chain1d(config);
  if (config.scenario == "grid2d") return detail::build_grid2d(config);
  return detail::build_fracture(config);
}

}  // namespace bbcouple::fem
