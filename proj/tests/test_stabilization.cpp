#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "bbcouple/fem/norms.hpp"
#include "bbcouple/fem/scenario.hpp"
#include "bbcouple/fem/skeleton.hpp"
#include "bbcouple/reduction/solve.hpp"
#include "bbcouple/stabilization/stabilization.hpp"

using namespace bbcouple;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Six fine cells of lengths (1,2,1,1,1,2)/8 grouped into two coarse cells.
StabilizationForm six_cell_form() {
  const Vector len{0.125, 0.25, 0.125, 0.125, 0.125, 0.25};
  const auto coarse = make_coarse_space({0, 0, 0, 1, 1, 1}, 2, 0.5);
  return StabilizationForm::build(SparseMatrix::diagonal(len), coarse, len);
}

fem::ScenarioConfig grid_config(std::size_t m, std::size_t n, std::size_t elements, double ratio) {
  fem::ScenarioConfig c;
  c.scenario = "grid2d";
  c.subdomains = {m, n};
  c.elements = elements;
  c.ratio = ratio;
  c.manufactured = "sine";
  return c;
}

StabilizationForm scenario_form(const fem::Scenario& sc, double gamma = 1.0) {
  return StabilizationForm::build(sc.problem.multiplier_mass, fem::coarsen(sc.skeleton, 3), sc.skeleton.cell_measure,
                                  gamma);
}

}  // namespace

TEST(ProjectCoarse, FixedPointsAreTheCoarseRange) {
  const auto f = six_cell_form();
  const Vector in_range{2.0, 2.0, 2.0, -1.0, -1.0, -1.0};
  const Vector p = project_coarse(f, in_range);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(p[i], in_range[i], 1e-15);
}

TEST(ProjectCoarse, OrthogonalComplementMapsToZero) {
  const auto f = six_cell_form();
  // Weighted mean zero on each coarse cell.
  const Vector orth{1.0, -0.5, 0.0, 2.0, 0.0, -1.0};
  EXPECT_LE(norm_inf(project_coarse(f, orth)), 1e-15);
}

TEST(ProjectCoarse, WeightedCellMeans) {
  const auto f = six_cell_form();
  const Vector l{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const Vector p = project_coarse(f, l);
  const double m0 = (0.125 * 1 + 0.25 * 2 + 0.125 * 3) / 0.5;
  const double m1 = (0.125 * 4 + 0.125 * 5 + 0.25 * 6) / 0.5;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], m0, 1e-14);
  for (std::size_t i = 3; i < 6; ++i) EXPECT_NEAR(p[i], m1, 1e-14);
}

TEST(ProjectCoarse, Idempotent) {
  std::mt19937_64 rng(4);
  const auto f = six_cell_form();
  for (int t = 0; t < 20; ++t) {
    const Vector p = project_coarse(f, random_vector(6, rng));
    EXPECT_LE(norm_inf(subtract(project_coarse(f, p), p)), 1e-12);
  }
}

TEST(CoarseSpace, EmptyCellRejected) {
  try {
    make_coarse_space({0, 0, 2}, 3, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::coarse_singular);
  }
}

TEST(CoarseSpace, NonPositiveGammaRejected) {
  const Vector len(3, 1.0);
  EXPECT_THROW(StabilizationForm::build(SparseMatrix::diagonal(len), make_coarse_space({0, 0, 0}, 1, 1.0), len, 0.0),
               Error);
}

TEST(ApplyJ, VanishesOnCoarseRange) {
  std::mt19937_64 rng(5);
  const auto f = six_cell_form();
  const Vector in_range{2.0, 2.0, 2.0, -1.0, -1.0, -1.0};
  EXPECT_NEAR(apply_j(f, in_range, random_vector(6, rng)), 0.0, 1e-15);
}

TEST(ApplyJ, NonNegative) {
  std::mt19937_64 rng(6);
  const auto f = six_cell_form();
  for (int t = 0; t < 1000; ++t) {
    const Vector l = random_vector(6, rng);
    EXPECT_GE(apply_j(f, l, l), 0.0);
  }
}

TEST(ApplyJ, AlternatingSignsOnFourCells) {
  const Vector len(4, 0.25);
  const auto f = StabilizationForm::build(SparseMatrix::diagonal(len), make_coarse_space({0, 0, 0, 0}, 1, 1.0), len);
  const Vector l{1.0, -1.0, 1.0, -1.0};
  EXPECT_LE(norm_inf(project_coarse(f, l)), 1e-15);
  EXPECT_NEAR(apply_j(f, l, l), 0.25, 1e-15);
}

TEST(ApplyJ, MatrixMatchesBilinearForm) {
  std::mt19937_64 rng(7);
  const auto f = six_cell_form();
  const DenseMatrix J = assemble_J(f);
  for (int t = 0; t < 10; ++t) {
    const Vector l = random_vector(6, rng);
    const Vector m = random_vector(6, rng);
    EXPECT_NEAR(dot(m, J.multiply(l)), apply_j(f, l, m), 1e-14);
  }
  const Eigen::MatrixXd Je = to_eigen(J);
  EXPECT_LE((Je - Je.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ApplyJ, AnnihilatesProlongation) {
  const auto sc = fem::build_scenario(grid_config(2, 1, 12, 1.0));
  const auto f = scenario_form(sc);
  const Eigen::MatrixXd JP = to_eigen(assemble_J(f)) * to_eigen(f.P.to_dense());
  EXPECT_LE(JP.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyJ, MonotoneInGamma) {
  std::mt19937_64 rng(8);
  const auto sc = fem::build_scenario(grid_config(2, 1, 12, 1.0));
  const auto f = scenario_form(sc);
  for (int t = 0; t < 20; ++t) {
    const Vector l = random_vector(sc.problem.multiplier_count(), rng);
    const double s = dot(apply_schur(sc.problem, l), l);
    const double j = apply_j(f, l, l);
    double prev = s;
    for (double gamma : {0.1, 1.0, 10.0}) {
      const double q = s + gamma * j;
      EXPECT_GE(q, prev);
      prev = q;
    }
  }
}

TEST(SolveStabilized, ZeroLoad) {
  auto cfg = grid_config(3, 3, 6, 1.0);
  cfg.manufactured = "zero";
  const auto sc = fem::build_scenario(cfg);
  const auto s = MultiplierSpace::build(sc.problem);
  for (double gamma : {0.5, 1.0, 4.0}) {
    const auto sol = solve_stabilized(sc.problem, s, scenario_form(sc, gamma));
    EXPECT_EQ(norm_inf(sol.lambda), 0.0);
    EXPECT_EQ(norm_inf(sol.u_blocks), 0.0);
  }
}

TEST(SolveStabilized, StableConfigurationWithinTwiceTheError) {
  const auto sc = fem::build_scenario(grid_config(2, 2, 12, 3.0));
  const auto s = MultiplierSpace::build(sc.problem);
  const auto plain = solve_reduced(sc.problem, s, nullptr);
  const auto stab = solve_stabilized(sc.problem, s, scenario_form(sc));
  const double e_plain = fem::broken_h1_error(sc.meshes, sc.ops, plain.u_blocks, sc.mcase);
  const double e_stab = fem::broken_h1_error(sc.meshes, sc.ops, stab.u_blocks, sc.mcase);
  EXPECT_LE(e_stab, 2.0 * e_plain);
}

TEST(SolveStabilized, RescuesUnstableConfiguration) {
  std::vector<double> errors;
  for (std::size_t n : {6u, 12u, 24u}) {
    const auto sc = fem::build_scenario(grid_config(2, 1, n, 1.0));
    const auto s = MultiplierSpace::build(sc.problem);
    EXPECT_THROW(solve_reduced(sc.problem, s, nullptr), Error);
    const auto sol = solve_stabilized(sc.problem, s, scenario_form(sc));
    errors.push_back(fem::broken_h1_error(sc.meshes, sc.ops, sol.u_blocks, sc.mcase));
  }
  // First-order energy convergence under halving of h.
  EXPECT_GT(std::log2(errors[0] / errors[1]), 0.8);
  EXPECT_GT(std::log2(errors[1] / errors[2]), 0.8);
}

TEST(SolveStabilized, FloatingSubdomainsWithinTwiceTheError) {
  const auto sc = fem::build_scenario(grid_config(3, 3, 6, 3.0));
  const auto s = MultiplierSpace::build(sc.problem);
  const auto stab = solve_stabilized(sc.problem, s, scenario_form(sc));
  EXPECT_LE(stab.constraint_residual, 1e-10);
  const auto plain = solve_reduced(sc.problem, s, nullptr);
  const double e_plain = fem::broken_h1_error(sc.meshes, sc.ops, plain.u_blocks, sc.mcase);
  const double e_stab = fem::broken_h1_error(sc.meshes, sc.ops, stab.u_blocks, sc.mcase);
  EXPECT_LE(e_stab, 2.0 * e_plain);
}

TEST(SolveStabilized, StabilityRestoredUnderRefinement) {
  // Smallest eigenvalue of S + J on ker G^T in the composite norm
  // |l|^2_Lambda + j(l, l); the Lambda-norm is realized by the Schur
  // complement of a twice finer primal mesh.
  std::vector<double> mins;
  for (std::size_t n : {6u, 12u, 24u}) {
    const auto sc = fem::build_scenario(grid_config(2, 1, n, 1.0));
    const auto sf = fem::build_scenario(grid_config(2, 1, 2 * n, 2.0));
    const Eigen::MatrixXd J = to_eigen(assemble_J(scenario_form(sc)));
    const Eigen::MatrixXd S = to_eigen(assemble_schur_dense(sc.problem));
    const Eigen::MatrixXd R = to_eigen(assemble_schur_dense(sf.problem));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S + J, R + J);
    mins.push_back(es.eigenvalues().minCoeff());
  }
  const double hi = *std::max_element(mins.begin(), mins.end());
  const double lo = *std::min_element(mins.begin(), mins.end());
  EXPECT_GT(lo, 0.0);
  EXPECT_LE((hi - lo) / hi, 0.2) << mins[0] << " " << mins[1] << " " << mins[2];
}

TEST(SolveStabilized, IterativePathAgreesWithDirect) {
  const auto sc = fem::build_scenario(grid_config(3, 3, 6, 1.0));
  const auto s = MultiplierSpace::build(sc.problem);
  const auto form = scenario_form(sc);
  const auto direct = solve_stabilized(sc.problem, s, form);
  // Reproduce the iterative branch with the same operator.
  const Vector compat = kernel_compatibility_rhs(sc.problem);
  const Vector lambda0 = compute_lambda0(s, scaled(-1.0, compat));
  const LinearOperator op = [&](const Vector& x) {
    Vector y = apply_schur(sc.problem, x);
    axpy(form.gamma, apply_J(form, x), y);
    return lift_representative(s, y);
  };
  CgOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 10 * s.deflated_dim();
  const auto run = cg_solve(op, detail::deflated_riesz(s),
                            lift_representative(s, subtract(assemble_g(sc.problem), op(lambda0))), opt);
  EXPECT_LE(norm_inf(subtract(add(lambda0, run.x), direct.lambda)), 1e-8 * norm_inf(direct.lambda));
}
