#include "ncvi/linsolve.hpp"

#include <random>

#include <gtest/gtest.h>

namespace ncvi {
namespace {

LinearOperator wrap(const Mat& a) {
  return {a.rows(), [a](const Vec& x) -> Vec { return a * x; }};
}

Mat random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
  return a;
}

GTEST_TEST(GmresTest, IdentityConvergesInOneIteration) {
  const Vec b = Vec::LinSpaced(7, -1, 2);
  const LinSolveResult r = solve_inexact(wrap(Mat::Identity(7, 7)), b, 1e-10);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LT((r.solution - b).norm(), 1e-14);
}

GTEST_TEST(GmresTest, ZeroRhs) {
  const LinSolveResult r = solve_inexact(wrap(Mat::Identity(3, 3) * 2), Vec::Zero(3), 1e-6);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.solution.norm(), 0.0);
  EXPECT_EQ(r.residual_norm, 0.0);
}

GTEST_TEST(GmresTest, MatchesDenseSolve) {
  std::mt19937_64 rng(1);
  const Mat a = random_matrix(rng, 50) / std::sqrt(50.0) + 3 * Mat::Identity(50, 50);
  const Vec b = random_matrix(rng, 50).col(0);
  const LinSolveResult r = solve_inexact(wrap(a), b, 1e-10);
  ASSERT_TRUE(r.converged);
  EXPECT_LT((r.solution - solve_dense(a, b)).norm(), 1e-8);
}

GTEST_TEST(GmresTest, ResidualContractOnIllConditionedSystems) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const int n = 30;
    const Mat q1 = random_matrix(rng, n).householderQr().householderQ();
    const Mat q2 = random_matrix(rng, n).householderQr().householderQ();
    const Vec s = Vec::LinSpaced(n, 0, -6).unaryExpr([](double e) { return std::pow(10.0, e); });
    const Mat a = q1 * s.asDiagonal() * q2;
    const Vec b = random_matrix(rng, n).col(0);
    for (double tol : {0.5, 1e-3, 1e-8}) {
      GmresOptions opt;
      opt.max_iter = 2000;
      const LinSolveResult r = solve_inexact(wrap(a), b, tol, opt);
      if (r.converged) {
        EXPECT_LE((a * r.solution - b).norm(), tol * b.norm());
        EXPECT_NEAR(r.residual_norm, (a * r.solution - b).norm(), 1e-12 * b.norm());
      }
    }
    GmresOptions opt;
    opt.max_iter = 2000;
    const LinSolveResult r = solve_inexact(wrap(a), b, 1e-10, opt);
    const Vec x = solve_dense(a, b);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((r.solution - x).norm(), 1e-7 * x.norm());
  }
}

GTEST_TEST(GmresTest, RestartsAndWarmStart) {
  std::mt19937_64 rng(3);
  const Mat a = random_matrix(rng, 40) / std::sqrt(40.0) + 2 * Mat::Identity(40, 40);
  const Vec b = random_matrix(rng, 40).col(0);
  GmresOptions opt;
  opt.restart = 5;
  const LinSolveResult r = solve_inexact(wrap(a), b, 1e-10, opt);
  ASSERT_TRUE(r.converged);
  const Vec x0 = r.solution;
  const LinSolveResult w = solve_inexact(wrap(a), b, 1e-6, opt, &x0);
  EXPECT_TRUE(w.converged);
  EXPECT_EQ(w.iterations, 0);
}

GTEST_TEST(GmresTest, Preconditioner) {
  Vec d = Vec::LinSpaced(20, 1, 1e4);
  const Mat a = d.asDiagonal();
  GmresOptions opt;
  opt.precond = [d](const Vec& v) -> Vec { return v.cwiseQuotient(d); };
  const LinSolveResult r = solve_inexact(wrap(a), Vec::Ones(20), 1e-10, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 2);
}

GTEST_TEST(GmresTest, RejectsBadArguments) {
  EXPECT_THROW(solve_inexact(wrap(Mat::Identity(2, 2)), Vec::Ones(3), 0.1), ContractViolation);
  EXPECT_THROW(solve_inexact(wrap(Mat::Identity(2, 2)), Vec::Ones(2), 1.5), ContractViolation);
}

GTEST_TEST(DenseSolveTest, Examples) {
  EXPECT_EQ(solve_dense(Mat::Identity(3, 3), Vec::Ones(3)), Vec::Ones(3));
  EXPECT_LT((solve_dense(Eigen::Vector2d(2, 4).asDiagonal().toDenseMatrix(), Eigen::Vector2d(2, 4)) - Vec::Ones(2)).norm(),
            1e-15);
  EXPECT_THROW(solve_dense(Mat::Zero(2, 2), Vec::Ones(2)), SingularMatrix);
}

GTEST_TEST(DenseSolveTest, RandomSpd) {
  std::mt19937_64 rng(4);
  const Mat g = random_matrix(rng, 30);
  const Mat a = g * g.transpose() + Mat::Identity(30, 30);
  const Vec b = random_matrix(rng, 30).col(0);
  EXPECT_LE((a * solve_dense(a, b) - b).norm(), 1e-10);
}

}  // namespace
}  // namespace ncvi
