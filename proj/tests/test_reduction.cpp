#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "bbcouple/fem/scenario.hpp"
#include "bbcouple/reduction/multiplier_space.hpp"
#include "bbcouple/reduction/preconditioner.hpp"
#include "bbcouple/reduction/solve.hpp"

using namespace bbcouple;

namespace {

fem::ScenarioConfig chain_config(std::size_t K, std::size_t elements, const std::string& mcase) {
  fem::ScenarioConfig c;
  c.scenario = "chain1d";
  c.subdomains = {K};
  c.elements = elements;
  c.manufactured = mcase;
  return c;
}

fem::ScenarioConfig grid_config(std::size_t m, std::size_t n, std::size_t elements) {
  fem::ScenarioConfig c;
  c.scenario = "grid2d";
  c.subdomains = {m, n};
  c.elements = elements;
  c.manufactured = "sine";
  return c;
}

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (double& x : v) x = u(rng);
  return v;
}

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

double max_abs_diff(const BlockVector& a, const BlockVector& b) { return norm_inf(subtract(a, b)); }

Eigen::MatrixXd kernel_complement(const CoupledProblem& p, Eigen::Index n) {
  const Eigen::MatrixXd G = to_eigen(assemble_G(p));
  if (G.cols() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G.transpose(), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - G.cols());
}

// Smallest eigenvalue of S restricted to ker G^T, measured against the
// metric m.
double restricted_min_eigenvalue(const CoupledProblem& p, const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd S = to_eigen(assemble_schur_dense(p));
  const Eigen::MatrixXd Q = kernel_complement(p, S.rows());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Q.transpose() * S * Q, Q.transpose() * m * Q);
  return es.eigenvalues().minCoeff();
}

double restricted_min_eigenvalue(const CoupledProblem& p) {
  return restricted_min_eigenvalue(p, to_eigen(p.multiplier_mass.to_dense()));
}

// Coercivity constant of s_h in the multiplier norm. The norm is realized by
// the Schur complement of a twice finer primal mesh over the same multipliers.
double coercivity_constant(std::size_t m, std::size_t elements, double ratio) {
  auto coarse = grid_config(m, m, elements);
  coarse.ratio = ratio;
  auto fine = grid_config(m, m, 2 * elements);
  fine.ratio = 2.0 * ratio;
  const auto sc = fem::build_scenario(coarse);
  const auto sf = fem::build_scenario(fine);
  return restricted_min_eigenvalue(sc.problem, to_eigen(assemble_schur_dense(sf.problem)));
}

}  // namespace

TEST(ProjectSigma, IdentityWithoutKernel) {
  const auto sc = fem::build_scenario(chain_config(2, 4, "cubic"));
  const auto s = MultiplierSpace::build(sc.problem);
  EXPECT_EQ(project_sigma(s, Vector{0.7}), Vector{0.7});
  EXPECT_EQ(lift_representative(s, Vector{0.7}), Vector{0.7});
}

TEST(ProjectSigma, RankOneAverage) {
  const auto sc = fem::build_scenario(chain_config(3, 4, "const"));
  const auto s = MultiplierSpace::build(sc.problem);
  const Vector r = project_sigma(s, Vector{0.3, 1.1});
  EXPECT_NEAR(r[0], 0.7, 1e-15);
  EXPECT_NEAR(r[1], 0.7, 1e-15);
}

TEST(ProjectSigma, SigmaOrthogonalProjector) {
  std::mt19937_64 rng(5);
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto& p = sc.problem;
  const auto s = MultiplierSpace::build(p);
  ASSERT_GT(s.kernel_dim(), 0u);
  for (int t = 0; t < 20; ++t) {
    const Vector l = random_vector(s.dim, rng);
    const Vector m = random_vector(s.dim, rng);
    const Vector pl = project_sigma(s, l);
    EXPECT_LE(norm_inf(subtract(project_sigma(s, pl), pl)), 1e-12 * norm_inf(l));
    EXPECT_LE(norm_inf(s.G.transpose_multiply(pl)), 1e-12 * s.G.max_abs() * norm_inf(l) * s.dim);
    const double a = dot(s.sigma.multiply(pl), m);
    const double b = dot(s.sigma.multiply(l), project_sigma(s, m));
    EXPECT_LE(std::abs(a - b), 1e-12 * (std::abs(a) + 1.0));
  }
}

TEST(LiftRepresentative, OrthogonalityAndDuality) {
  std::mt19937_64 rng(6);
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto s = MultiplierSpace::build(sc.problem);
  for (int t = 0; t < 20; ++t) {
    const Vector phi = random_vector(s.dim, rng);
    const Vector rep = lift_representative(s, phi);
    EXPECT_LE(norm_inf(s.sigma_inv_G.transpose_multiply(rep)), 1e-12 * norm_inf(phi) * s.dim);
    const Vector lhat = project_sigma(s, random_vector(s.dim, rng));
    EXPECT_LE(std::abs(dot(rep, lhat) - dot(phi, lhat)), 1e-12 * (norm2(phi) * norm2(lhat)));
  }
}

TEST(Lambda0, ZeroData) {
  const auto sc = fem::build_scenario(chain_config(3, 4, "const"));
  const auto s = MultiplierSpace::build(sc.problem);
  EXPECT_EQ(norm_inf(compute_lambda0(s, Vector{0.0})), 0.0);
}

TEST(Lambda0, HandComputedChain) {
  const auto sc = fem::build_scenario(chain_config(3, 6, "const"));
  const auto s = MultiplierSpace::build(sc.problem);
  const Vector f_z{1.0 / 3.0};
  const Vector l0 = compute_lambda0(s, f_z);
  EXPECT_NEAR(l0[0], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(l0[1], -1.0 / 6.0, 1e-15);
  EXPECT_NEAR(s.G.transpose_multiply(l0)[0], -f_z[0], 1e-15);
}

TEST(Lambda0, InvariantUnderSigmaScaling) {
  auto sc = fem::build_scenario(chain_config(3, 6, "const"));
  const Vector a = compute_lambda0(MultiplierSpace::build(sc.problem), Vector{0.4});
  sc.problem.multiplier_mass = SparseMatrix::diagonal(Vector(2, 7.5));
  const Vector b = compute_lambda0(MultiplierSpace::build(sc.problem), Vector{0.4});
  EXPECT_NEAR(a[0], b[0], 1e-15);
  EXPECT_NEAR(a[1], b[1], 1e-15);
}

TEST(Lambda0, SigmaOrthogonalToDeflatedSpace) {
  std::mt19937_64 rng(8);
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto s = MultiplierSpace::build(sc.problem);
  const Vector f_z = random_vector(s.kernel_dim(), rng);
  const Vector l0 = compute_lambda0(s, f_z);
  EXPECT_LE(norm_inf(add(s.G.transpose_multiply(l0), f_z)), 1e-12 * norm_inf(f_z) * s.dim);
  const Vector lhat = project_sigma(s, random_vector(s.dim, rng));
  EXPECT_LE(std::abs(dot(s.sigma.multiply(l0), lhat)), 1e-12 * norm2(l0) * norm2(lhat) * s.dim);
}

TEST(Preconditioner, BdeltaPlusIsRightInverse) {
  std::mt19937_64 rng(9);
  for (const auto& cfg : {chain_config(8, 4, "sine"), grid_config(3, 3, 6)}) {
    const auto sc = fem::build_scenario(cfg);
    const auto& p = sc.problem;
    const auto d = PreconditionerData::build(p);
    EXPECT_EQ(max_abs_diff(apply_Bdelta_plus(p, d, Vector(p.multiplier_count(), 0.0)),
                           apply_B_transpose(p, Vector(p.multiplier_count(), 0.0))),
              0.0);
    for (int t = 0; t < 10; ++t) {
      const Vector phi = random_vector(p.multiplier_count(), rng);
      EXPECT_LE(norm_inf(subtract(apply_B(p, apply_Bdelta_plus(p, d, phi)), phi)), 1e-10 * norm_inf(phi));
      BlockVector v;
      for (const auto& sub : p.subproblems) v.push_back(random_vector(sub.dof_count(), rng));
      const BlockVector once = apply_Bdelta_plus(p, d, apply_B(p, v));
      const BlockVector twice = apply_Bdelta_plus(p, d, apply_B(p, once));
      EXPECT_LE(max_abs_diff(once, twice), 1e-10 * norm_inf(v));
    }
  }
}

TEST(Preconditioner, SymmetricPositiveSemidefinite) {
  std::mt19937_64 rng(10);
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto& p = sc.problem;
  const auto d = PreconditionerData::build(p);
  const auto s = MultiplierSpace::build(p);
  EXPECT_EQ(norm_inf(apply_preconditioner(p, d, s, Vector(s.dim, 0.0))), 0.0);
  for (int t = 0; t < 20; ++t) {
    const Vector a = random_vector(s.dim, rng);
    const Vector b = random_vector(s.dim, rng);
    const double ab = dot(apply_preconditioner(p, d, s, a), b);
    const double ba = dot(apply_preconditioner(p, d, s, b), a);
    EXPECT_LE(std::abs(ab - ba), 1e-10 * (std::abs(ab) + 1.0));
    EXPECT_GE(dot(apply_preconditioner(p, d, s, a), a), -1e-12 * dot(a, a));
    EXPECT_LE(norm_inf(s.G.transpose_multiply(apply_preconditioner(p, d, s, a))), 1e-12 * s.dim * norm_inf(a));
  }
}

TEST(Preconditioner, IdentityScalarProductBuilds) {
  const auto sc = fem::build_scenario(grid_config(2, 2, 6));
  EXPECT_NO_THROW(PreconditionerData::build(sc.problem, PrimalScalarProduct::identity));
}

TEST(SolveReduced, ZeroLoadGivesZero) {
  const auto sc = fem::build_scenario(chain_config(3, 6, "zero"));
  const auto s = MultiplierSpace::build(sc.problem);
  const auto sol = solve_reduced(sc.problem, s, nullptr);
  EXPECT_EQ(norm_inf(sol.lambda), 0.0);
  EXPECT_EQ(norm_inf(sol.z_star), 0.0);
  EXPECT_EQ(norm_inf(sol.u_blocks), 0.0);
}

TEST(SolveReduced, LinearLoadTwoSubdomains) {
  const auto sc = fem::build_scenario(chain_config(2, 32, "cubic"));
  const auto s = MultiplierSpace::build(sc.problem);
  const auto sol = solve_reduced(sc.problem, s, nullptr);
  EXPECT_NEAR(sol.lambda[0], 1.0 / 24.0, 5e-3);
  const auto mono = solve_monolithic(sc.problem);
  EXPECT_LE(max_abs_diff(sol.u_blocks, mono.u), 1e-8);
  ASSERT_TRUE(sol.condition_estimate.has_value());
  EXPECT_NEAR(*sol.condition_estimate, 1.0, 1e-12);
}

TEST(SolveReduced, FloatingMiddleSubdomain) {
  const auto sc = fem::build_scenario(chain_config(3, 12, "const"));
  const auto& p = sc.problem;
  const auto s = MultiplierSpace::build(p);
  const auto d = PreconditionerData::build(p);
  const auto mono = solve_monolithic(p);
  for (const PreconditionerData* pd : {static_cast<const PreconditionerData*>(nullptr), &d}) {
    const auto sol = solve_reduced(p, s, pd);
    EXPECT_NEAR(std::abs(sol.lambda[0]), 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(sol.lambda[0], -sol.lambda[1], 1e-12);
    EXPECT_LE(max_abs_diff(sol.u_blocks, mono.u), 1e-8);
    double mean = 0.0;
    for (double v : mono.u[1]) mean += v;
    mean /= static_cast<double>(mono.u[1].size());
    EXPECT_NEAR(sol.z_star[0], mean, 1e-10);
    EXPECT_LE(sol.constraint_residual, 1e-10);
  }
}

TEST(SolveReduced, MonolithicEquivalence2D) {
  for (const auto& cfg : {grid_config(2, 2, 6), grid_config(3, 3, 6), grid_config(3, 2, 9)}) {
    const auto sc = fem::build_scenario(cfg);
    const auto& p = sc.problem;
    ASSERT_LE(p.multiplier_count(), 200u);
    const auto s = MultiplierSpace::build(p);
    const auto d = PreconditionerData::build(p);
    const auto sol = solve_reduced(p, s, &d);
    const auto mono = solve_monolithic(p);
    EXPECT_LE(max_abs_diff(sol.u_blocks, mono.u), 1e-8);
    EXPECT_LE(sol.continuity_residual, 10.0 * ReducedConfig{}.tol);
    EXPECT_LE(sol.deflation_defect, 1e-10);
    ASSERT_TRUE(sol.coercivity.has_value());
    EXPECT_GT(sol.coercivity->min_ritz, 0.0);
    // Ritz values of the preconditioned operator are positive.
    const auto est = lanczos_condition_estimate(sol.history);
    EXPECT_GT(est.lambda_min, 0.0);
  }
}

TEST(SolveReduced, KernelCoefficientsReproduced) {
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto& p = sc.problem;
  const auto s = MultiplierSpace::build(p);
  const auto sol = solve_reduced(p, s, nullptr);
  const BlockVector particular = reconstruct(p, sol.lambda, Vector(p.kernel_dim(), 0.0));
  for (std::size_t j = 0; j < p.kernel_dim(); ++j) {
    const auto col = p.kernel.columns[j];
    const auto& basis = p.subproblems[col.subdomain].kernel_basis;
    const Vector zcol = basis.column(col.local_column);
    const Vector diff = subtract(sol.u_blocks[col.subdomain], particular[col.subdomain]);
    EXPECT_NEAR(dot(zcol, diff) / dot(zcol, zcol), sol.z_star[j], 1e-12);
  }
}

TEST(SolveReduced, MaxIterationsSurfaced) {
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto s = MultiplierSpace::build(sc.problem);
  ReducedConfig cfg;
  cfg.max_iter = 1;
  try {
    solve_reduced(sc.problem, s, nullptr, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::max_iterations);
  }
}

TEST(SolveReduced, UnstableConfigurationIsIndefinite) {
  auto cfg = grid_config(2, 1, 12);
  cfg.ratio = 1.0;
  const auto sc = fem::build_scenario(cfg);
  const auto s = MultiplierSpace::build(sc.problem);
  try {
    solve_reduced(sc.problem, s, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::indefinite_operator);
  }
}

TEST(Coercivity, BoundedBelowUnderRefinement) {
  std::vector<double> c;
  for (std::size_t n : {6u, 12u, 24u}) c.push_back(coercivity_constant(3, n, 3.0));
  const double hi = *std::max_element(c.begin(), c.end());
  const double lo = *std::min_element(c.begin(), c.end());
  EXPECT_GT(lo, 0.0);
  EXPECT_LE((hi - lo) / hi, 0.2) << c[0] << " " << c[1] << " " << c[2];
}

TEST(Coercivity, DegeneratesWithoutMeshRatio) {
  EXPECT_LT(coercivity_constant(2, 12, 1.0), 1e-8);
}

TEST(Coercivity, ProbeAgreesWithEigenvalue) {
  const auto sc = fem::build_scenario(grid_config(3, 3, 6));
  const auto s = MultiplierSpace::build(sc.problem);
  const auto rep = probe_coercivity(sc.problem, s, 3);
  ASSERT_TRUE(rep.coercive);
  EXPECT_NEAR(rep.min_ritz, restricted_min_eigenvalue(sc.problem), 1e-6 * rep.max_ritz);
}

TEST(Condition, PreconditionerImproves2D) {
  const auto sc = fem::build_scenario(grid_config(4, 4, 6));
  const auto& p = sc.problem;
  const auto s = MultiplierSpace::build(p);
  const auto d = PreconditionerData::build(p);
  const double plain = estimate_condition(solve_reduced(p, s, nullptr));
  const double pre = estimate_condition(solve_reduced(p, s, &d));
  EXPECT_LT(pre, plain);
}

TEST(Condition, BoundedUnderSubdomainDoubling) {
  std::vector<double> kappa;
  for (std::size_t m : {2u, 4u, 8u}) {
    const auto sc = fem::build_scenario(grid_config(m, m, 6));
    const auto s = MultiplierSpace::build(sc.problem);
    const auto d = PreconditionerData::build(sc.problem);
    kappa.push_back(estimate_condition(solve_reduced(sc.problem, s, &d)));
  }
  EXPECT_LE(kappa[2], 2.0 * kappa[1]);
}

TEST(Condition, InsufficientHistory) {
  ReducedSolution empty;
  try {
    estimate_condition(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_history);
  }
}
