#include "ncvi/oracles.hpp"
#include "ncvi/sets.hpp"
#include "ncvi/smoothing.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace ncvi::oracle {
namespace {

Vec gaussian_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (auto& e : v) e = scale * nd(rng);
  return v;
}

Point gaussian_like(std::mt19937_64& rng, const Point& shape, double scale = 1.0) {
  return from_flat(shape, gaussian_vec(rng, shape.dim(), scale));
}

// Unit rows with a known interior point, so the polyhedron is nonempty.
std::pair<Mat, Vec> random_polyhedron(std::mt19937_64& rng, int m, int n) {
  Mat a(m, n);
  for (int i = 0; i < m; ++i) a.row(i) = gaussian_vec(rng, n).normalized().transpose();
  const Vec c = gaussian_vec(rng, n, 0.5);
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  Vec b = a * c;
  for (int i = 0; i < m; ++i) b(i) -= ud(rng);
  return {a, b};
}

Point row_point(double t, std::initializer_list<double> xs) {
  Mat x(1, static_cast<Eigen::Index>(xs.size()));
  int j = 0;
  for (double v : xs) x(0, j++) = v;
  return Point::scalar_matrix(t, x);
}

GTEST_TEST(FdJacobianTest, Examples) {
  std::mt19937_64 rng(1);
  Mat a(3, 4);
  for (int i = 0; i < 3; ++i) a.row(i) = gaussian_vec(rng, 4).transpose();
  const Mat j = fd_jacobian([&](const Vec& v) -> Vec { return a * v; }, gaussian_vec(rng, 4));
  EXPECT_LE((j - a).cwiseAbs().maxCoeff(), 1e-9);

  const auto o = make_orthant(1);
  const Mat d = fd_jacobian([&](const Point& z) { return smooth_project(*o, z, 1.0).value; },
                            Point::vector(Vec::Zero(1)));
  EXPECT_NEAR(d(0, 0), 0.5, 1e-8);

  const auto psd = make_psd(3);
  for (int k = 0; k < 10; ++k) {
    const Point z = gaussian_like(rng, psd->shape());
    const Mat fd = fd_jacobian([&](const Point& y) { return smooth_project(*psd, y, 0.1).value; }, z);
    const Mat fast = smooth_derivative_apply(*psd, z, 0.1).matrix();
    EXPECT_LE((fd - fast).norm(), 1e-5 * fast.norm());
  }
}

GTEST_TEST(BrutePolyhedronTest, Examples) {
  Mat box(4, 2);
  box << 1, 0, 0, 1, -1, 0, 0, -1;
  const PolyhedralProjection p = brute_project_polyhedron(box, Eigen::Vector4d(0, 0, -1, -1), Eigen::Vector2d(2, -1));
  EXPECT_LT((p.x - Eigen::Vector2d(1, 0)).norm(), 1e-14);

  Mat half(1, 2);
  half << 1, 0;
  const PolyhedralProjection h = brute_project_polyhedron(half, Vec::Zero(1), Eigen::Vector2d(-3, 5));
  EXPECT_LT((h.x - Eigen::Vector2d(0, 5)).norm(), 1e-14);
  ASSERT_EQ(h.active.size(), 1u);
  EXPECT_NEAR(h.lambda(0), 3.0, 1e-14);

  EXPECT_THROW(brute_project_polyhedron(Mat::Zero(17, 2), Vec::Zero(17), Vec::Zero(2)), TooManyConstraints);
  EXPECT_THROW(brute_project_polyhedron(Mat::Zero(2, 2), Vec::Zero(3), Vec::Zero(2)), ContractViolation);
}

GTEST_TEST(BrutePolyhedronTest, AgreesWithIndependentMethods) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 40; ++k) {
    const auto [a, b] = random_polyhedron(rng, 8, 4);
    const Vec z = gaussian_vec(rng, 4, 2.0);
    const Vec x = brute_project_polyhedron(a, b, z).x;
    EXPECT_GE((a * x - b).minCoeff(), -1e-10);
    EXPECT_LE((dual_gradient_project_polyhedron(a, b, z) - x).norm(), 1e-8);
    const auto set = make_polyhedron(a, b);
    EXPECT_LE((set->exact_project(Point::vector(z)).vec() - x).norm(), 1e-10);
    EXPECT_LE((smooth_project(*set, Point::vector(z), 1e-9).value.vec() - x).norm(), 1e-7);
  }
}

GTEST_TEST(BruteLinfTest, Examples) {
  const LinfOracle a = brute_project_linf(0, Eigen::Vector2d(2, 0.5));
  EXPECT_DOUBLE_EQ(a.t, 1.0);
  EXPECT_EQ(a.x, Eigen::Vector2d(1, 0.5));
  EXPECT_EQ(a.k_star, 1);
  const LinfOracle b = brute_project_linf(5, Eigen::Vector2d(1, 1));
  EXPECT_DOUBLE_EQ(b.t, 5.0);
  EXPECT_EQ(b.x, Eigen::Vector2d(1, 1));
  EXPECT_EQ(b.k_star, 0);
  const LinfOracle c = brute_project_linf(-3, Eigen::Vector2d(1, 1));
  EXPECT_DOUBLE_EQ(c.t, 0.0);
  EXPECT_EQ(c.x.norm(), 0.0);
  EXPECT_EQ(c.k_star, 2);
}

GTEST_TEST(BruteLinfTest, MatchesSortedFormula) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + k % 6;
    const double zo = gaussian_vec(rng, 1, 2.0)(0);
    const Vec z = gaussian_vec(rng, n, 2.0);
    const LinfOracle o = brute_project_linf(zo, z);
    const LinfProjection p = linf_project(zo, z);
    EXPECT_EQ(o.k_star, p.k_star);
    EXPECT_NEAR(o.t, p.t, 1e-12 * (1 + std::abs(zo) + z.norm()));
    EXPECT_LE((o.x - p.x).norm(), 1e-12 * (1 + std::abs(zo) + z.norm()));
  }
}

GTEST_TEST(ExactDerivativeTest, MatchFiniteDifferencesOfProjection) {
  std::mt19937_64 rng(4);
  auto check = [](const std::string& label, const Mat& exact, const Mat& fd) {
    EXPECT_LE((exact - fd).norm(), 1e-5 * std::max(1.0, exact.norm())) << label;
  };
  for (int k = 0; k < 10; ++k) {
    const Vec z = gaussian_vec(rng, 4);
    check("orthant", exact_derivative_orthant(z), fd_jacobian(project_orthant, z));
    const Vec s = gaussian_vec(rng, 3);
    check("soc", exact_derivative_soc(s), fd_jacobian(project_soc, s));
    const Point zp = Point::sym(Mat(gaussian_vec(rng, 9).reshaped(3, 3)));
    check("psd", exact_derivative_psd(zp), fd_jacobian(project_psd, zp));
    const Point zl = gaussian_like(rng, Point::scalar_matrix(0, Mat::Zero(1, 3)));
    check("linf", exact_derivative_linf(zl.t, zl.x.row(0).transpose()),
          fd_jacobian([](const Vec& v) -> Vec {
            const LinfOracle o = brute_project_linf(v(0), v.tail(v.size() - 1));
            Vec out(v.size());
            out << o.t, o.x;
            return out;
          }, to_flat(zl)));
    const Point zn = gaussian_like(rng, Point::scalar_matrix(0, Mat::Zero(2, 3)));
    check("nuclear", exact_derivative_nuclear(zn), fd_jacobian(project_nuclear, zn));
    const auto [a, b] = random_polyhedron(rng, 6, 3);
    const Vec zh = gaussian_vec(rng, 3, 2.0);
    check("polyhedron", exact_derivative_polyhedron(a, b, zh),
          fd_jacobian([&](const Vec& v) -> Vec { return brute_project_polyhedron(a, b, v).x; }, zh));
  }
}

GTEST_TEST(ExactDerivativeTest, NonDifferentiablePointsThrow) {
  EXPECT_THROW(exact_derivative_orthant(Eigen::Vector2d(1, 0)), NotDifferentiable);
  EXPECT_THROW(exact_derivative_soc(Eigen::Vector3d(1, 1, 0)), NotDifferentiable);
  EXPECT_THROW(exact_derivative_psd(Point::sym(Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix())),
               NotDifferentiable);
}

GTEST_TEST(OpNormDerivativeTest, Conditions) {
  const Point w = row_point(0.3, {-0.2, 0.7, 0.1});
  const Point inside = row_point(5, {1, 2, 0});
  EXPECT_EQ(norm(exact_proj_derivative_opnorm(inside, w) - w), 0.0);
  const Point polar = row_point(-5, {1, 2, 0});
  EXPECT_EQ(norm(exact_proj_derivative_opnorm(polar, w)), 0.0);

  std::mt19937_64 rng(5);
  const auto set = make_opnorm(2, 3);
  int tested = 0;
  while (tested < 10) {
    const Point z = gaussian_like(rng, set->shape(), 1.5);
    const ThinSvd s = thin_svd(z.x);
    // Keep points strictly between the cone and its polar.
    if (!(z.t < s.sigma(0) - 0.1 && z.t > -s.sigma.sum() + 0.1)) continue;
    const FaceDiagnostics d = diagnose(*set, z);
    if (!d.differentiable) continue;
    ++tested;
    const Mat exact = exact_derivative_opnorm(z);
    const Mat fd = fd_jacobian([&](const Point& y) { return set->exact_project(y); }, z);
    EXPECT_LE((exact - fd).norm(), 1e-5 * std::max(1.0, exact.norm()));
    const Mat lim = smooth_derivative_apply(*set, z, 1e-5).matrix();
    EXPECT_LE((exact - lim).cwiseAbs().maxCoeff(), 1e-3);
  }
}

GTEST_TEST(AppendixBTest, RegressionChecksPass) {
  const AppendixB r = appendix_b_regression();
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.quantity << " err=" << c.error();
  EXPECT_NEAR(r.wrong(2, 2) - r.correct(2, 2), 1.0 / 6.0, 1e-3);
  EXPECT_NEAR(r.fd_projection(2, 2), 0.5, 1e-8);
}

GTEST_TEST(OracleReportTest, PassIffWithinTolerance) {
  EXPECT_TRUE(OracleReport::scalar("a", 1.0, 1.0 + 1e-9, 1e-8).pass);
  EXPECT_FALSE(OracleReport::scalar("a", 1.0, 1.0 + 1e-7, 1e-8).pass);
  EXPECT_TRUE(OracleReport::scalar("b", 1e3, 1e3 + 1e-4, 1e-6, true).pass);
  const OracleReport m = OracleReport::matrix("m", Mat::Identity(2, 2), 2 * Mat::Identity(2, 2), 0.5);
  EXPECT_FALSE(m.pass);
  EXPECT_EQ(m.pass, m.error() <= m.tolerance);

  std::ostringstream csv;
  write_reports_csv(csv, {m});
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), OracleReport::csv_header());
  const nlohmann::json j = reports_json({m});
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["quantity"], "m");
  EXPECT_EQ(j[0]["pass"], false);
  EXPECT_DOUBLE_EQ(j[0]["tolerance"].get<double>(), 0.5);
}

}  // namespace
}  // namespace ncvi::oracle
