#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bbcouple/coupling/coupled_problem.hpp"
#include "bbcouple/fem/norms.hpp"
#include "bbcouple/fem/scenario.hpp"
#include "bbcouple/harness/config.hpp"
#include "bbcouple/harness/report.hpp"
#include "bbcouple/numerics/errors.hpp"
#include "bbcouple/numerics/tolerances.hpp"
#include "bbcouple/reduction/multiplier_space.hpp"
#include "bbcouple/reduction/preconditioner.hpp"
#include "bbcouple/reduction/solve.hpp"
#include "bbcouple/stabilization/stabilization.hpp"

namespace bbcouple::harness {

// Row acceptance limits.
inline constexpr double kConstraintLimit = 1e-10;
inline constexpr double kContinuityLimit = 1e-8;
inline constexpr double kOracleLimit = 1e-8;
inline constexpr double kFluxLimit = 1e-8;
inline constexpr double kExactLimit = 1e-10;  // errors below this count as exact
inline constexpr double kMonotoneFloor = 1e-12;

struct Execution {
  std::optional<ReducedSolution> solution;
  std::optional<CoercivityReport> probe;
  std::string status = "ok";  // ok | unstable | fail
  std::string message;
  double wall_time = 0.0;
};

inline ReducedConfig reduced_config(const fem::ScenarioConfig& c) {
  ReducedConfig r;
  r.tol = c.solver.tol;
  r.max_iter = c.solver.max_iter;
  r.coercivity_probe = c.solver.coercivity_probe;
  r.seed = c.seed;
  return r;
}

inline StabilizationForm stabilization_form(const fem::Scenario& s) {
  return StabilizationForm::build(s.problem.multiplier_mass, fem::coarsen(s.skeleton, s.config.stabilization.coarsen),
                                  s.skeleton.cell_measure, s.config.stabilization.gamma);
}

/// One solve of a built scenario. Over-rich multiplier failures (no
/// coercivity, CG stall, singular B D^-1 B^T) are reported as "unstable";
/// every other error as "fail".
inline Execution execute(const fem::Scenario& s, bool precondition, bool stabilize, bool probe_first = false) {
  Execution ex;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const MultiplierSpace space = MultiplierSpace::build(s.problem);
    ReducedConfig cfg = reduced_config(s.config);
    if (probe_first) {
      ex.probe = probe_coercivity(s.problem, space, cfg.seed);
      cfg.coercivity_probe = false;
      if (!ex.probe->coercive && !stabilize) {
        throw Error(ErrorCode::indefinite_operator, "s_h is not coercive on ker G^T (" + ex.probe->failure + ")");
      }
    }
    if (stabilize) {
      ex.solution = solve_stabilized(s.problem, space, stabilization_form(s), cfg);
    } else if (precondition) {
      const PreconditionerData pd = PreconditionerData::build(s.problem, s.config.preconditioner.d);
      ex.solution = solve_reduced(s.problem, space, &pd, cfg);
    } else {
      ex.solution = solve_reduced(s.problem, space, nullptr, cfg);
    }
    if (ex.solution->coercivity && !ex.probe) ex.probe = ex.solution->coercivity;
  } catch (const Error& e) {
    const bool over_rich = !stabilize && (e.code() == ErrorCode::indefinite_operator ||
                                          e.code() == ErrorCode::max_iterations ||
                                          e.code() == ErrorCode::singular_matrix);
    ex.status = over_rich ? "unstable" : "fail";
    ex.message = e.what();
  }
  ex.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ex;
}

inline std::string subdomain_label(const fem::ScenarioConfig& c) {
  if (c.scenario == "fracture_star") return "3";
  std::string out;
  for (std::size_t i = 0; i < c.subdomains.size(); ++i) out += (i ? "x" : "") + std::to_string(c.subdomains[i]);
  return out;
}

inline RunRecord make_record(const std::string& label, const Json& config, const fem::Scenario& s, bool precondition,
                             bool stabilize) {
  RunRecord r;
  r.config = config;
  r.set("label", label);
  r.set("scenario", s.config.scenario);
  r.set("case", s.mcase.id);
  r.set("subdomains", subdomain_label(s.config));
  r.set("h", s.h);
  r.set("ratio", s.config.ratio);
  r.set("preconditioned", static_cast<long long>(precondition && !stabilize));
  r.set("stabilized", static_cast<long long>(stabilize));
  r.set("dim_lambda", static_cast<long long>(s.problem.multiplier_count()));
  r.set("dim_z", static_cast<long long>(s.problem.kernel_dim()));
  return r;
}

/// Fills solution metrics and applies the row acceptance limits.
inline void fill(RunRecord& r, const fem::Scenario& s, const Execution& ex, bool stabilize) {
  r.wall_time = ex.wall_time;
  r.message = ex.message;
  if (ex.probe) {
    r.set("min_ritz", ex.probe->min_ritz);
    r.set("max_ritz", ex.probe->max_ritz);
  }
  r.set("status", ex.status);
  if (!ex.solution) return;
  const ReducedSolution& sol = *ex.solution;
  r.set("iterations", static_cast<long long>(sol.iterations));
  if (sol.condition_estimate) r.set("kappa", *sol.condition_estimate);
  r.set("h1_error", fem::broken_h1_error(s.meshes, s.ops, sol.u_blocks, s.mcase));
  if (s.mcase.flux) r.set("multiplier_error", fem::multiplier_error(s.skeleton, sol.lambda, s.mcase));
  r.set("constraint_residual", sol.constraint_residual);
  r.set("continuity_residual", sol.continuity_residual);
  std::string why;
  if (!(sol.constraint_residual <= kConstraintLimit)) why = "constraint residual above limit";
  // The stabilized problem relaxes B u = 0 by design.
  if (!stabilize && !(sol.continuity_residual <= kContinuityLimit)) why = "continuity residual above limit";
  if (!why.empty()) {
    r.set("status", std::string("fail"));
    r.message = r.message.empty() ? why : r.message + "; " + why;
  }
}

inline void mark_failed(RunRecord& r, const std::string& why) {
  r.set("status", std::string("fail"));
  r.message = r.message.empty() ? why : r.message + "; " + why;
}

inline std::string level_label(std::size_t i) { return "level" + std::to_string(i); }

namespace detail {

inline Json json_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

// Builds level i; scenario construction errors become a failed row.
inline std::optional<fem::Scenario> build_level(const StudyConfig& study, std::size_t i, ExperimentReport& report) {
  try {
    return fem::build_scenario(parse_scenario(study.levels[i], "levels[" + std::to_string(i) + "]"));
  } catch (const Error& e) {
    RunRecord r;
    r.config = study.levels[i];
    r.set("label", level_label(i));
    r.set("status", std::string("fail"));
    r.message = std::string("level ") + std::to_string(i) + ": " + e.what();
    report.runs.push_back(std::move(r));
    return std::nullopt;
  }
}

inline ExperimentReport start(const StudyConfig& study) {
  ExperimentReport r;
  r.study = study.study;
  r.name = study.name;
  return r;
}

}  // namespace detail

/// Refinement study at fixed delta/h: broken H1 and multiplier errors per
/// level and least-squares observed orders.
inline ExperimentReport run_convergence(const StudyConfig& study) {
  if (study.levels.size() < 3) throw Error(ErrorCode::config_invalid, "levels: convergence needs at least 3 levels");
  ExperimentReport report = detail::start(study);
  std::vector<double> hs, eu, el;
  for (std::size_t i = 0; i < study.levels.size(); ++i) {
    auto s = detail::build_level(study, i, report);
    if (!s) continue;
    const bool pc = s->config.preconditioner.enabled;
    const bool st = s->config.stabilization.enabled;
    Execution ex = execute(*s, pc, st);
    if (!ex.message.empty()) ex.message = "level " + std::to_string(i) + ": " + ex.message;
    if (ex.status == "unstable") ex.status = "fail";
    RunRecord r = make_record(level_label(i), study.levels[i], *s, pc, st);
    fill(r, *s, ex, st);
    if (ex.solution) {
      hs.push_back(s->h);
      eu.push_back(*r.number("h1_error"));
      el.push_back(r.number("multiplier_error").value_or(0.0));
    }
    report.runs.push_back(std::move(r));
  }
  Json& d = report.derived;
  d["h"] = detail::json_array(hs);
  d["h1_error"] = detail::json_array(eu);
  d["multiplier_error"] = detail::json_array(el);
  const bool u_exact = !eu.empty() && *std::max_element(eu.begin(), eu.end()) <= kExactLimit;
  const bool l_exact = !el.empty() && *std::max_element(el.begin(), el.end()) <= kExactLimit;
  d["h1_exact"] = u_exact;
  d["multiplier_exact"] = l_exact;
  if (hs.size() >= 3 && !u_exact) d["h1_order"] = fit_order(hs, eu);
  if (hs.size() >= 3 && !l_exact) d["multiplier_order"] = fit_order(hs, el);
  bool monotone = true;
  for (std::size_t i = 1; i < el.size(); ++i)
    if (!(el[i] < el[i - 1] || el[i] <= kMonotoneFloor)) monotone = false;
  d["multiplier_monotone"] = monotone;
  return report;
}

/// delta/h sweep: probe coercivity and solve per ratio; with stabilization
/// enabled each ratio also gets a stabilized row.
inline ExperimentReport run_stability_sweep(const StudyConfig& study) {
  const auto configs = study.scenarios();
  bool below = false, above = false;
  for (const auto& c : configs) {
    below = below || c.ratio <= 1.0;
    above = above || c.ratio > 1.0;
  }
  if (!below || !above) {
    throw Error(ErrorCode::config_invalid, "levels: the sweep needs ratios both at most 1 and above 1");
  }
  ExperimentReport report = detail::start(study);
  std::vector<std::pair<double, double>> stabilized_errors;  // (h, error)
  std::vector<std::pair<double, double>> stable_errors;      // (h, error) of successful plain runs
  double largest_unstable = 0.0, smallest_stable = 0.0;
  for (std::size_t i = 0; i < study.levels.size(); ++i) {
    auto s = detail::build_level(study, i, report);
    if (!s) continue;
    const bool pc = s->config.preconditioner.enabled;
    Execution ex = execute(*s, pc, false, true);
    RunRecord r = make_record(level_label(i), study.levels[i], *s, pc, false);
    fill(r, *s, ex, false);
    if (ex.status == "unstable") {
      largest_unstable = std::max(largest_unstable, s->config.ratio);
    } else if (ex.status == "ok" && !r.failed()) {
      smallest_stable = smallest_stable == 0.0 ? s->config.ratio : std::min(smallest_stable, s->config.ratio);
      stable_errors.push_back({s->h, *r.number("h1_error")});
    }
    report.runs.push_back(std::move(r));
    if (s->config.stabilization.enabled) {
      Execution exs = execute(*s, false, true, true);
      RunRecord rs = make_record(level_label(i) + "_stabilized", study.levels[i], *s, false, true);
      fill(rs, *s, exs, true);
      if (exs.solution) stabilized_errors.push_back({s->h, *rs.number("h1_error")});
      report.runs.push_back(std::move(rs));
    }
  }
  Json& d = report.derived;
  d["largest_unstable_ratio"] = largest_unstable;
  d["smallest_stable_ratio"] = smallest_stable;
  // Stabilized error over the best plain stable error at equal h.
  double worst = 0.0;
  bool compared = false;
  for (const auto& [h, e] : stabilized_errors) {
    double ref = -1.0;
    for (const auto& [hs, es] : stable_errors)
      if (std::abs(hs - h) <= 1e-12 * h) ref = ref < 0.0 ? es : std::min(ref, es);
    if (ref > 0.0) {
      worst = std::max(worst, e / ref);
      compared = true;
    }
  }
  if (compared) d["stabilized_error_ratio"] = worst;
  return report;
}

/// Iterations and condition estimates with and without M-hat as the number
/// of subdomains grows.
inline ExperimentReport run_preconditioner_study(const StudyConfig& study) {
  if (study.levels.size() < 3) throw Error(ErrorCode::config_invalid, "levels: scaling needs at least 3 levels");
  ExperimentReport report = detail::start(study);
  std::vector<double> it_p, it_u, k_p, k_u;
  for (std::size_t i = 0; i < study.levels.size(); ++i) {
    auto s = detail::build_level(study, i, report);
    if (!s) continue;
    for (bool pc : {true, false}) {
      Execution ex = execute(*s, pc, false);
      if (ex.status == "unstable") ex.status = "fail";
      RunRecord r = make_record(level_label(i) + (pc ? "_pcg" : "_cg"), study.levels[i], *s, pc, false);
      fill(r, *s, ex, false);
      auto& its = pc ? it_p : it_u;
      auto& ks = pc ? k_p : k_u;
      its.push_back(r.number("iterations").value_or(std::nan("")));
      ks.push_back(r.number("kappa").value_or(std::nan("")));
      report.runs.push_back(std::move(r));
    }
  }
  auto growth = [](const std::vector<double>& v) {
    std::vector<double> g;
    for (std::size_t i = 1; i < v.size(); ++i) g.push_back(v[i] / v[i - 1]);
    return g;
  };
  Json& d = report.derived;
  d["iterations_preconditioned"] = detail::json_array(it_p);
  d["iterations_plain"] = detail::json_array(it_u);
  d["kappa_preconditioned"] = detail::json_array(k_p);
  d["kappa_plain"] = detail::json_array(k_u);
  d["iteration_growth_preconditioned"] = detail::json_array(growth(it_p));
  d["iteration_growth_plain"] = detail::json_array(growth(it_u));
  d["kappa_growth_preconditioned"] = detail::json_array(growth(k_p));
  return report;
}

/// Junction fluxes e^T (A_k u_k - f_k) of the three segments.
inline std::vector<double> junction_fluxes(const fem::Scenario& s, const BlockVector& u) {
  std::vector<double> flux;
  for (std::size_t k = 0; k < s.subdomain_count(); ++k) {
    const auto& sub = s.problem.subproblems[k];
    const Vector r = subtract(sub.stiffness.multiply(u[k]), sub.load);
    const std::size_t junction = s.meshes[k].vertex_count() - 1;
    flux.push_back(r[s.ops[k].dofs.dof(junction)]);
  }
  return flux;
}

inline ExperimentReport run_fracture(const StudyConfig& study) {
  ExperimentReport report = detail::start(study);
  Json closed = Json::array();
  for (std::size_t i = 0; i < study.levels.size(); ++i) {
    auto s = detail::build_level(study, i, report);
    if (!s) continue;
    if (s->config.scenario != "fracture_star") {
      throw Error(ErrorCode::config_invalid, "levels[" + std::to_string(i) + "].scenario: fracture study needs fracture_star");
    }
    const bool pc = s->config.preconditioner.enabled;
    Execution ex = execute(*s, pc, false);
    RunRecord r = make_record(level_label(i), study.levels[i], *s, pc, false);
    fill(r, *s, ex, false);
    if (ex.solution) {
      const auto flux = junction_fluxes(*s, ex.solution->u_blocks);
      // Balance relative to the larger of the fluxes and the injected load,
      // so that vanishing fluxes are not compared against their own roundoff.
      double fmax = 0.0, sum = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        fmax = std::max({fmax, std::abs(flux[k]), std::abs(s->config.loads[k]) * s->config.lengths[k]});
        sum += flux[k];
      }
      const double balance = fmax > 0.0 ? std::abs(sum) / fmax : std::abs(sum);
      const auto cf = fem::fracture_closed_form(s->mcase.kappa, s->config.lengths, s->config.loads);
      double ferr = 0.0, jerr = 0.0, fscale = 0.0;
      for (std::size_t k = 0; k < 3; ++k) fscale = std::max(fscale, std::abs(cf.flux[k]));
      for (std::size_t k = 0; k < 3; ++k) {
        ferr = std::max(ferr, std::abs(flux[k] - cf.flux[k]));
        const std::size_t junction = s->meshes[k].vertex_count() - 1;
        jerr = std::max(jerr, std::abs(ex.solution->u_blocks[k][s->ops[k].dofs.dof(junction)] - cf.junction_value));
      }
      if (fscale > 0.0) ferr /= fscale;
      if (cf.junction_value != 0.0) jerr /= std::abs(cf.junction_value);
      for (std::size_t k = 0; k < 3; ++k) r.set("flux_" + std::to_string(k + 1), flux[k]);
      r.set("flux_balance", balance);
      r.set("flux_error", ferr);
      r.set("junction_error", jerr);
      if (!(balance <= kFluxLimit)) mark_failed(r, "junction flux balance above limit");
      if (!(ferr <= kFluxLimit)) mark_failed(r, "flux split differs from the closed form");
      const auto oracle = solve_monolithic(s->problem);
      double du = 0.0;
      for (std::size_t k = 0; k < 3; ++k) du = std::max(du, norm_inf(subtract(oracle.u[k], ex.solution->u_blocks[k])));
      r.set("oracle_u_diff", du);
      r.set("oracle_lambda_diff", norm_inf(subtract(oracle.lambda, ex.solution->lambda)));
      Json c;
      c["junction_value"] = cf.junction_value;
      c["flux"] = detail::json_array(cf.flux);
      closed.push_back(std::move(c));
    }
    report.runs.push_back(std::move(r));
  }
  report.derived["closed_form"] = std::move(closed);
  return report;
}

/// Reduced solve against the dense monolithic saddle point solve.
inline ExperimentReport run_oracle(const StudyConfig& study) {
  ExperimentReport report = detail::start(study);
  for (std::size_t i = 0; i < study.levels.size(); ++i) {
    auto s = detail::build_level(study, i, report);
    if (!s) continue;
    const bool pc = s->config.preconditioner.enabled;
    const bool st = s->config.stabilization.enabled;
    Execution ex = execute(*s, pc, st);
    if (ex.status == "unstable") ex.status = "fail";
    RunRecord r = make_record(level_label(i), study.levels[i], *s, pc, st);
    fill(r, *s, ex, st);
    std::size_t total = s->problem.multiplier_count();
    for (const auto& sub : s->problem.subproblems) total += sub.dof_count();
    if (ex.solution && st) {
      mark_failed(r, "the monolithic oracle does not apply to stabilized solves");
    } else if (ex.solution && total > tol::dense_limit) {
      mark_failed(r, "problem too large for the dense oracle");
    } else if (ex.solution) {
      const auto oracle = solve_monolithic(s->problem);
      double du = 0.0;
      for (std::size_t k = 0; k < oracle.u.size(); ++k)
        du = std::max(du, norm_inf(subtract(oracle.u[k], ex.solution->u_blocks[k])));
      const double dl = norm_inf(subtract(oracle.lambda, ex.solution->lambda));
      r.set("oracle_u_diff", du);
      r.set("oracle_lambda_diff", dl);
      if (!(du <= kOracleLimit && dl <= kOracleLimit)) mark_failed(r, "differs from the monolithic solve");
    }
    report.runs.push_back(std::move(r));
  }
  return report;
}

inline ExperimentReport run_study(const StudyConfig& study) {
  if (study.study == "converge") return run_convergence(study);
  if (study.study == "sweep") return run_stability_sweep(study);
  if (study.study == "precond") return run_preconditioner_study(study);
  if (study.study == "fracture") return run_fracture(study);
  return run_oracle(study);
}

}  // namespace bbcouple::harness
