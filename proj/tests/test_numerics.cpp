#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <random>

#include "bbcouple/numerics/bordered.hpp"
#include "bbcouple/numerics/cg.hpp"
#include "bbcouple/numerics/dense.hpp"
#include "bbcouple/numerics/lanczos.hpp"
#include "bbcouple/numerics/sparse.hpp"

using namespace bbcouple;

namespace {

DenseMatrix random_spd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  DenseMatrix s = a.transpose() * a;
  for (std::size_t i = 0; i < n; ++i) s(i, i) += static_cast<double>(n);
  return s;
}

LinearOperator diag_op(Vector d) {
  return [d](const Vector& x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = d[i] * x[i];
    return y;
  };
}

SparseMatrix neumann_laplacian(std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t e = 0; e + 1 < n; ++e) {
    t.push_back({e, e, 1.0});
    t.push_back({e + 1, e + 1, 1.0});
    t.push_back({e, e + 1, -1.0});
    t.push_back({e + 1, e, -1.0});
  }
  return SparseMatrix::from_triplets(n, n, t);
}

}  // namespace

TEST(SolveDense, Identity) {
  const Vector x = solve_dense(DenseMatrix::identity(3), Vector{1, 2, 3});
  EXPECT_EQ(x, (Vector{1, 2, 3}));
}

TEST(SolveDense, Diagonal) {
  const Vector x = solve_dense(DenseMatrix::from_rows({{2, 0}, {0, 4}}), Vector{2, 8});
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(SolveDense, RandomSpdKnownSolution) {
  std::mt19937_64 rng(7);
  const DenseMatrix m = random_spd(5, rng);
  const Vector ones(5, 1.0);
  const Vector x = solve_dense(m, m.multiply(ones));
  for (double v : x) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(SolveDense, ResidualBound) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix m(8, 8);
    Vector b(8);
    for (std::size_t i = 0; i < 8; ++i) {
      b[i] = u(rng);
      for (std::size_t j = 0; j < 8; ++j) m(i, j) = u(rng);
    }
    const Vector x = solve_dense(m, b);
    const Vector r = subtract(m.multiply(x), b);
    EXPECT_LE(norm_inf(r), 1e-10 * (m.norm_inf() * norm_inf(x) + norm_inf(b)));
  }
}

TEST(SolveDense, SingularThrows) {
  try {
    solve_dense(DenseMatrix::from_rows({{1, 2}, {2, 4}}), Vector{1, 1});
    FAIL() << "expected SingularMatrix";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::singular_matrix);
  }
}

TEST(Cholesky, MatchesLu) {
  std::mt19937_64 rng(3);
  const DenseMatrix m = random_spd(6, rng);
  const Vector b{1, -2, 3, 0.5, 0, 4};
  const Vector x1 = CholeskyFactorization(m).solve(b);
  const Vector x2 = solve_dense(m, b);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(x1[i], x2[i], 1e-12);
}

TEST(Sparse, DuplicatesSummed) {
  const SparseMatrix s = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, -1.0}});
  EXPECT_DOUBLE_EQ(s.coeff(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(s.coeff(1, 0), -1.0);
  EXPECT_EQ(s.nonzeros(), 2u);
}

TEST(Sparse, OutOfRangeRejected) {
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), Error);
}

TEST(Sparse, TransposeMultiplyMatchesDense) {
  const SparseMatrix s = SparseMatrix::from_triplets(2, 3, {{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, -3.0}});
  const Vector x{1, 2};
  const Vector y = s.transpose_multiply(x);
  const Vector z = s.to_dense().transpose_multiply(x);
  EXPECT_EQ(y, z);
  EXPECT_EQ(s.transpose().multiply(x), y);
}

TEST(Bordered, NeumannLaplacianHandSolve) {
  const BorderedSystem sys{neumann_laplacian(2), DenseMatrix::column_matrix(Vector{1, 1})};
  const auto sol = solve_bordered(sys, Vector{1, -1});
  EXPECT_NEAR(sol.x[0], 0.5, 1e-14);
  EXPECT_NEAR(sol.x[1], -0.5, 1e-14);
  EXPECT_NEAR(sol.multipliers[0], 0.0, 1e-14);
}

TEST(Bordered, EmptyBorderIsPlainSolve) {
  const SparseMatrix a = SparseMatrix::from_dense(DenseMatrix::from_rows({{4, 1}, {1, 3}}));
  const auto sol = solve_bordered({a, DenseMatrix(2, 0)}, Vector{1, 2});
  const Vector ref = solve_dense(a.to_dense(), Vector{1, 2});
  EXPECT_NEAR(sol.x[0], ref[0], 1e-14);
  EXPECT_NEAR(sol.x[1], ref[1], 1e-14);
  EXPECT_TRUE(sol.multipliers.empty());
}

TEST(Bordered, KernelRhsAbsorbedByMultiplier) {
  const BorderedSystem sys{neumann_laplacian(2), DenseMatrix::column_matrix(Vector{1, 1})};
  const auto sol = solve_bordered(sys, Vector{1, 1});
  EXPECT_NEAR(norm_inf(sol.x), 0.0, 1e-14);
  EXPECT_NEAR(sol.multipliers[0], 1.0, 1e-14);
}

TEST(Bordered, OrthogonalityAndEquationOnRandomSemidefinite) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 10 + static_cast<std::size_t>(trial);
    // A = Q diag(0, d...) Q^T with a random kernel vector via Eigen.
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Random(n, n)).householderQ();
    Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(n, 0.0, 5.0);
    d(0) = 0.0;
    const Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();
    DenseMatrix ad(n, n);
    DenseMatrix kern(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      kern(i, 0) = q(i, 0);
      for (std::size_t j = 0; j < n; ++j) ad(i, j) = 0.5 * (a(i, j) + a(j, i));
    }
    const BorderedSystem sys{SparseMatrix::from_dense(ad), kern};
    Vector rhs(n);
    for (double& v : rhs) v = u(rng);
    const auto sol = solve_bordered(sys, rhs);
    EXPECT_LE(std::abs(kern.transpose_multiply(sol.x)[0]), 1e-10 * norm2(sol.x));
    Vector r = sys.core.multiply(sol.x);
    axpy(sol.multipliers[0], kern.column(0), r);
    EXPECT_LE(norm_inf(subtract(r, rhs)), 1e-10 * norm_inf(rhs));
  }
}

TEST(Bordered, WrongKernelRejected) {
  const BorderedSystem sys{neumann_laplacian(3), DenseMatrix::column_matrix(Vector{1, 0, 0})};
  EXPECT_GT(kernel_defect(sys), 1e-8);
}

TEST(Bordered, DependentBorderRejected) {
  DenseMatrix n(3, 2);
  for (std::size_t i = 0; i < 3; ++i) n(i, 0) = n(i, 1) = 1.0;
  try {
    BorderedSolver solver(BorderedSystem{neumann_laplacian(3), n});
    FAIL() << "expected SingularBorderedSystem";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::singular_bordered_system);
  }
}

TEST(Cg, IdentityOneIteration) {
  const auto r = cg_solve(identity_operator(), identity_operator(), Vector{1, 2, 3}, {});
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_NEAR(r.x[2], 3.0, 1e-14);
}

TEST(Cg, DiagonalTwoIterations) {
  const auto r = cg_solve(diag_op({1, 10}), identity_operator(), Vector{1, 10}, {});
  EXPECT_LE(r.iterations, 2u);
  EXPECT_NEAR(r.x[0], 1.0, 1e-12);
  EXPECT_NEAR(r.x[1], 1.0, 1e-12);
}

TEST(Cg, PerfectPreconditionerOneIteration) {
  const auto r = cg_solve(diag_op({1, 10}), diag_op({1, 0.1}), Vector{1, 10}, {});
  EXPECT_EQ(r.iterations, 1u);
}

TEST(Cg, TerminatesWithinRankPlusTwo) {
  std::mt19937_64 rng(1);
  const DenseMatrix m = random_spd(12, rng);
  const LinearOperator op = [&m](const Vector& x) { return m.multiply(x); };
  CgOptions opt;
  opt.tol = 1e-12;
  const auto r = cg_solve(op, identity_operator(), Vector(12, 1.0), opt);
  EXPECT_LE(r.iterations, 14u);
}

TEST(Cg, IndefiniteDetected) {
  try {
    cg_solve(diag_op({1, -1}), identity_operator(), Vector{1, 1}, {});
    FAIL() << "expected IndefiniteOperator";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::indefinite_operator);
  }
}

TEST(Cg, MaxIterationsReported) {
  CgOptions opt;
  opt.max_iter = 2;
  Vector d(10);
  for (std::size_t i = 0; i < 10; ++i) d[i] = 1.0 + static_cast<double>(i);
  try {
    cg_solve(diag_op(d), identity_operator(), Vector(10, 1.0), opt);
    FAIL() << "expected MaxIterations";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::max_iterations);
  }
}

TEST(Lanczos, IdentityKappaOne) {
  const auto r = cg_solve(identity_operator(), identity_operator(), Vector{1, 2, 3}, {});
  EXPECT_NEAR(lanczos_condition_estimate(r.history).kappa, 1.0, 1e-12);
}

TEST(Lanczos, TwoByTwoExactSpectrum) {
  const auto r = cg_solve(diag_op({1, 4}), identity_operator(), Vector{1, 1}, {});
  EXPECT_NEAR(lanczos_condition_estimate(r.history).kappa, 4.0, 1e-8);
}

TEST(Lanczos, TenDistinctValuesBracketed) {
  Vector d(10);
  for (std::size_t i = 0; i < 10; ++i) d[i] = 1.0 + static_cast<double>(i);
  CgOptions opt;
  opt.tol = 1e-14;
  const auto r = cg_run(diag_op(d), identity_operator(), Vector(10, 1.0), opt);
  ASSERT_GE(r.history.alphas.size(), 10u);
  const double k = lanczos_condition_estimate(r.history).kappa;
  EXPECT_GE(k, 9.0);
  EXPECT_LE(k, 10.0 + 1e-8);
}

TEST(Lanczos, TridiagonalEigenvaluesMatchEigen) {
  Tridiagonal t{{2.0, 3.0, 1.5, 4.0}, {0.5, -0.7, 0.3}};
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) m(i, i) = t.diag[static_cast<std::size_t>(i)];
  for (int i = 0; i < 3; ++i) m(i, i + 1) = m(i + 1, i) = t.off[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto ev = tridiagonal_eigenvalues(t);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ev[static_cast<std::size_t>(i)], es.eigenvalues()(i), 1e-12);
}

TEST(Lanczos, KappaNonDecreasingInIterations) {
  Vector d(30);
  for (std::size_t i = 0; i < 30; ++i) d[i] = 1.0 + 0.37 * static_cast<double>(i * i);
  CgOptions opt;
  opt.tol = 1e-14;
  const auto r = cg_run(diag_op(d), identity_operator(), Vector(30, 1.0), opt);
  double prev = 0.0;
  for (std::size_t k = 2; k <= r.history.alphas.size(); ++k) {
    CgHistory h;
    h.alphas.assign(r.history.alphas.begin(), r.history.alphas.begin() + static_cast<std::ptrdiff_t>(k));
    h.betas.assign(r.history.betas.begin(), r.history.betas.begin() + static_cast<std::ptrdiff_t>(k - 1));
    const double kappa = lanczos_condition_estimate(h).kappa;
    EXPECT_GE(kappa, prev * (1.0 - 1e-10));
    prev = kappa;
  }
}

TEST(Lanczos, EmptyHistoryRejected) {
  try {
    lanczos_condition_estimate(CgHistory{});
    FAIL() << "expected InsufficientHistory";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_history);
  }
}
