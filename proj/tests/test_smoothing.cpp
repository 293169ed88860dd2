#include "ncvi/smoothing.hpp"

#include <random>

#include <gtest/gtest.h>

namespace ncvi {
namespace {

Point row_point(double t, std::initializer_list<double> xs) {
  Mat x(1, static_cast<Eigen::Index>(xs.size()));
  int j = 0;
  for (double v : xs) x(0, j++) = v;
  return Point::scalar_matrix(t, x);
}

Point random_like(std::mt19937_64& rng, const Point& shape, double scale = 1.0) {
  std::normal_distribution<double> nd;
  Vec v(shape.dim());
  for (auto& e : v) e = scale * nd(rng);
  return from_flat(shape, v);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> ud(std::log(lo), std::log(hi));
  return std::exp(ud(rng));
}

std::vector<std::pair<std::string, SmoothedSet>> all_sets() {
  Mat a(5, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1, 1, 1;
  Vec b(5);
  b << 0, 0, -1, -1, 0.2;
  return {{"orthant", make_orthant(3)},   {"psd", make_psd(3)},           {"polyhedron", make_polyhedron(a, b)},
          {"linf", make_linf(3)},         {"opnorm", make_opnorm(2, 3)},  {"opnorm-square", make_opnorm(2, 2)},
          {"nuclear", make_nuclear(2, 3)}, {"soc3", make_soc3()}};
}

GTEST_TEST(SmoothProjectTest, ClosedFormExamples) {
  const auto o = make_orthant(1);
  EXPECT_DOUBLE_EQ(smooth_project(*o, Point::vector(Vec::Zero(1)), 1.0).value.vec()(0), 1.0);
  EXPECT_DOUBLE_EQ(smooth_project(*o, Point::vector(Vec::Constant(1, 3)), 2.0).value.vec()(0), 4.0);

  const Point p = smooth_project(*make_psd(2), Point::sym(Eigen::Vector2d(3, -4).asDiagonal().toDenseMatrix()), 2.0).value;
  EXPECT_NEAR(p.x(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(p.x(1, 1), 0.5 * (-4 + std::sqrt(32.0)), 1e-14);
  EXPECT_NEAR(p.x(1, 1), 0.828427, 1e-6);
  EXPECT_NEAR(p.x(0, 1), 0.0, 1e-14);

  const Point s = smooth_project(*make_soc3(), row_point(0, {1, 0}), 0.0).value;
  EXPECT_NEAR(s.t, 0.5, 1e-15);
  EXPECT_NEAR(s.x(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(s.x(0, 1), 0.0, 1e-15);
}

// t = (2 t0 + s1 + s2)/4 and x = x0 (2|x0| + s2 - s1)/(4|x0|).
GTEST_TEST(SmoothProjectTest, SecondOrderConeClosedForm) {
  std::mt19937_64 rng(1);
  const auto soc = make_soc3();
  for (int k = 0; k < 100; ++k) {
    const Point z = random_like(rng, soc->shape(), 2.0);
    const double mu = log_uniform(rng, 1e-3, 1.0);
    const double r = z.x.norm();
    const double s1 = std::sqrt((z.t - r) * (z.t - r) + 8 * mu * mu);
    const double s2 = std::sqrt((z.t + r) * (z.t + r) + 8 * mu * mu);
    const Point p = smooth_project(*soc, z, mu).value;
    EXPECT_NEAR(p.t, 0.25 * (2 * z.t + s1 + s2), 1e-12 * (1 + r));
    EXPECT_LT((p.x - z.x * (2 * r + s2 - s1) / (4 * r)).norm(), 1e-12 * (1 + r));
  }
  const Point p0 = smooth_project(*soc, row_point(0.5, {0, 0}), 0.1).value;
  EXPECT_EQ(p0.x.norm(), 0.0);
  EXPECT_GT(p0.t, 0.5);
}

GTEST_TEST(SmoothProjectTest, ZeroMuIsExactProjection) {
  std::mt19937_64 rng(2);
  for (const auto& [label, s] : all_sets()) {
    const Point z = random_like(rng, s->shape(), 2.0);
    const SmoothingEval e = smooth_project(*s, z, 0.0);
    EXPECT_EQ(norm(e.value - s->exact_project(z)), 0.0) << label;
    EXPECT_EQ(e.residual, 0.0);
  }
}

GTEST_TEST(SmoothProjectTest, ResidualAndInteriority) {
  std::mt19937_64 rng(3);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 100; ++k) {
      const Point z = random_like(rng, s->shape(), 2.0);
      const double mu = log_uniform(rng, 1e-4, 1.0);
      const SmoothingEval e = smooth_project(*s, z, mu);
      EXPECT_LE(e.residual, 1e-11 * (1 + norm(z))) << label;
      EXPECT_GT(e.min_margin, 0.0) << label;
      EXPECT_TRUE(s->is_interior(e.value)) << label;
    }
  }
}

// A residual computed directly from the barrier gradient; valid away from the
// boundary, where the gradient is well conditioned.
GTEST_TEST(SmoothProjectTest, ImplicitEquationAtModerateMu) {
  std::mt19937_64 rng(4);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 20; ++k) {
      const Point z = random_like(rng, s->shape(), 1.0);
      const double mu = 0.5;
      const Point p = smooth_project(*s, z, mu).value;
      EXPECT_LE(norm(p + mu * mu * s->barrier_gradient(p) - z), 1e-10 * (1 + norm(z))) << label;
    }
  }
}

GTEST_TEST(SmoothProjectTest, LipschitzInMu) {
  std::mt19937_64 rng(5);
  for (const auto& [label, s] : all_sets()) {
    const double st = std::sqrt(s->theta());
    for (int k = 0; k < 20; ++k) {
      const Point z = random_like(rng, s->shape(), 2.0);
      const double mu = log_uniform(rng, 1e-4, 1.0), nu = log_uniform(rng, 1e-4, 1.0);
      const Point a = smooth_project(*s, z, mu).value, b = smooth_project(*s, z, nu).value;
      EXPECT_LE(norm(a - b), st * std::abs(mu - nu) * (1 + 1e-8) + 1e-13) << label;
      EXPECT_LE(norm(a - s->exact_project(z)), st * mu * (1 + 1e-8)) << label;
    }
  }
}

GTEST_TEST(SmoothProjectTest, SmallMuOnPolyhedra) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  for (int k = 0; k < 200; ++k) {
    Mat a(8, 4);
    for (auto& e : a.reshaped()) e = nd(rng);
    a.rowwise().normalize();
    Vec c(4), z(4);
    for (auto& e : c) e = 0.5 * nd(rng);
    for (auto& e : z) e = 2 * nd(rng);
    Vec b = a * c;
    for (auto& e : b) e -= ud(rng);
    const auto s = make_polyhedron(a, b);
    const Point pz = Point::vector(z);
    for (double mu : {1e-6, 1e-8, 1e-9}) {
      const SmoothingEval e = smooth_project(*s, pz, mu);
      EXPECT_LE(norm(e.value - s->exact_project(pz)), std::sqrt(s->theta()) * mu * (1 + 1e-6)) << k;
    }
  }
}

GTEST_TEST(SmoothProjectTest, FenchelRelation) {
  std::mt19937_64 rng(6);
  for (auto [m, n] : std::vector<std::pair<int, int>>{{2, 3}, {3, 3}, {1, 4}}) {
    const auto nuc = make_nuclear(m, n);
    const auto op = make_opnorm(m, n);
    for (int k = 0; k < 30; ++k) {
      const Point z = random_like(rng, nuc->shape(), 2.0);
      const double mu = log_uniform(rng, 1e-3, 1.0);
      const Point lhs = smooth_project(*nuc, z, mu).value - smooth_project(*op, -z, mu).value - z;
      EXPECT_LE(norm(lhs), 1e-10 * (1 + norm(z)));
    }
  }
}

GTEST_TEST(SmoothDerivativeTest, Examples) {
  const auto o = make_orthant(1);
  for (double mu : {1e-3, 0.3, 2.0}) {
    const Point d = smooth_derivative_apply(*o, Point::vector(Vec::Zero(1)), mu)(Point::vector(Vec::Ones(1)));
    EXPECT_DOUBLE_EQ(d.vec()(0), 0.5);
  }
  const auto psd = make_psd(3);
  const Mat d = smooth_derivative_apply(*psd, Point::sym(Eigen::Vector3d(50, 80, 100).asDiagonal().toDenseMatrix()), 0.1)
                    .matrix();
  EXPECT_LT((d - Mat::Identity(6, 6)).cwiseAbs().maxCoeff(), 0.1 * 0.1 / (50.0 * 50.0));
}

GTEST_TEST(SmoothDerivativeTest, StrictContraction) {
  std::mt19937_64 rng(7);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 30; ++k) {
      const Point z = random_like(rng, s->shape(), 2.0);
      const double mu = log_uniform(rng, 1e-3, 1.0);
      const DerivativeApply d = smooth_derivative_apply(*s, z, mu);
      const Point u = random_like(rng, s->shape());
      const double q = inner(u, d(u));
      EXPECT_GT(q, 0.0) << label;
      EXPECT_LT(q, inner(u, u)) << label;
      const Mat dm = d.matrix();
      EXPECT_LE((dm - dm.transpose()).norm(), 1e-9 * (1 + dm.norm())) << label;
    }
  }
}

GTEST_TEST(SmoothDerivativeTest, FastPathMatchesDenseAssembly) {
  std::mt19937_64 rng(8);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 20; ++k) {
      const Point z = random_like(rng, s->shape(), 2.0);
      const double mu = log_uniform(rng, 1e-2, 1.0);
      const Mat fast = smooth_derivative_apply(*s, z, mu).matrix();
      const Mat dense = smooth_derivative_dense(*s, z, mu).matrix();
      EXPECT_LE((fast - dense).norm(), 1e-9 * (1 + dense.norm())) << label << " mu=" << mu;
    }
  }
}

GTEST_TEST(SmoothDerivativeTest, ActionMatchesFiniteDifference) {
  std::mt19937_64 rng(9);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 50; ++k) {
      const Point z = random_like(rng, s->shape(), 2.0);
      const double mu = log_uniform(rng, 1e-3, 1.0);
      Point u = random_like(rng, s->shape());
      u *= 1.0 / norm(u);
      const double eps = 1e-6 * (1 + norm(z));
      const Point fd = (1 / (2 * eps)) * (smooth_project(*s, z + eps * u, mu).value - smooth_project(*s, z - eps * u, mu).value);
      const Point act = smooth_derivative_apply(*s, z, mu)(u);
      EXPECT_LE(norm(act - fd), 1e-5 * std::max(norm(fd), 1.0)) << label;
    }
  }
}

GTEST_TEST(SmoothDerivativeTest, SecondOrderConeLimitAtBoundaryNormal) {
  Mat expect(3, 3);
  expect << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 0.5;
  const double off = 1e-4;
  const Mat d = smooth_derivative_apply(*make_soc3(), row_point(off, {1 + off, off}), 1e-4).matrix();
  EXPECT_LE((d - expect).cwiseAbs().maxCoeff(), 1e-3);
}

GTEST_TEST(WrongBarrierTest, Examples) {
  const Mat j = wrong_barrier_soc_jacobian(0.25);
  EXPECT_NEAR(j(0, 1), 1 / (2 * std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(j(2, 2), 2.0 / 3.0, 1e-15);
  const Mat lim = wrong_barrier_soc_jacobian(1e-9);
  EXPECT_NEAR(lim(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(lim(2, 2) - 0.5, 1.0 / 6.0, 1e-15);
}

GTEST_TEST(CurvatureTest, OrthantSupremumIsAttained) {
  const auto o = make_orthant(1);
  for (double mu : {0.01, 0.1, 1.0}) {
    const double h = 1e-3 * mu;
    auto p = [&](double z) { return smooth_project(*o, Point::vector(Vec::Constant(1, z)), mu).value.vec()(0); };
    const double second = (p(h) - 2 * p(0) + p(-h)) / (h * h);
    EXPECT_NEAR(second, 1 / (4 * mu), 1e-5 / mu);
  }
}

}  // namespace
}  // namespace ncvi
