#include "ncvi/sets.hpp"

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

struct Named {
  std::string label;
  SmoothedSet set;
};

std::vector<Named> all_sets() {
  Mat a(4, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << 0, 0, -1, -1;
  return {{"orthant", make_orthant(3)},          {"psd", make_psd(3)},
          {"box", make_polyhedron(a, b)},        {"linf", make_linf(3)},
          {"opnorm", make_opnorm(2, 3)},         {"nuclear", make_nuclear(2, 3)},
          {"soc3", make_soc3()}};
}

// A random perturbation of the canonical interior point, shrunk until twice
// the step stays inside, so the result keeps half the canonical margin.
Point random_interior(std::mt19937_64& rng, const ConvexSet& s) {
  const Point c = s.interior_point();
  Point d = random_like(rng, c.zeros_like());
  for (int k = 0; k < 60; ++k) {
    if (s.is_interior(c + 2.0 * d)) return c + d;
    d *= 0.5;
  }
  return c;
}

GTEST_TEST(SetTest, ThetaValues) {
  EXPECT_EQ(make_orthant(4)->theta(), 4);
  EXPECT_EQ(make_psd(3)->theta(), 3);
  EXPECT_EQ(make_polyhedron(Mat::Identity(2, 2), Vec::Zero(2))->theta(), 2);
  EXPECT_EQ(make_linf(3)->theta(), 6);
  EXPECT_EQ(make_opnorm(2, 5)->theta(), 7);
  EXPECT_EQ(make_nuclear(2, 5)->theta(), 7);
  EXPECT_EQ(make_soc3()->theta(), 2);
}

GTEST_TEST(SetTest, InfeasiblePolyhedronIsRejected) {
  Mat a(2, 1);
  a << 1, -1;
  EXPECT_THROW(make_polyhedron(a, Vec::Constant(2, 1.0)), InfeasibleSet);
  // A flat polyhedron has no strictly feasible point either.
  EXPECT_THROW(make_polyhedron(a, Vec::Zero(2)), InfeasibleSet);
}

GTEST_TEST(SetTest, BarrierValueExamples) {
  EXPECT_NEAR(make_orthant(2)->barrier_value(Point::vector(Vec::Ones(2))), 0.0, 1e-15);
  EXPECT_NEAR(make_psd(2)->barrier_value(Point::sym(Mat::Identity(2, 2))), 0.0, 1e-15);
  EXPECT_NEAR(make_opnorm(1, 1)->barrier_value(row_point(2, {1})), -std::log(3.0), 1e-14);
}

GTEST_TEST(SetTest, BarrierGradientExamples) {
  const Point g = make_orthant(2)->barrier_gradient(Point::vector(Eigen::Vector2d(1, 2)));
  EXPECT_NEAR((g.vec() - Eigen::Vector2d(-1, -0.5)).norm(), 0.0, 1e-15);
  const Point gp = make_psd(2)->barrier_gradient(Point::sym(Mat::Identity(2, 2)));
  EXPECT_NEAR((gp.x + Mat::Identity(2, 2)).norm(), 0.0, 1e-15);
  const Point gq = make_polyhedron(Mat::Identity(2, 2), Vec::Zero(2))->barrier_gradient(Point::vector(Eigen::Vector2d(2, 4)));
  EXPECT_NEAR((gq.vec() - Eigen::Vector2d(-0.5, -0.25)).norm(), 0.0, 1e-15);
}

GTEST_TEST(SetTest, BarrierHessianExamples) {
  const Point h = make_orthant(1)->barrier_hessian_apply(Point::vector(Vec::Constant(1, 2)), Point::vector(Vec::Ones(1)));
  EXPECT_DOUBLE_EQ(h.vec()(0), 0.25);
  std::mt19937_64 rng(1);
  const Point u = random_like(rng, Point::sym(Mat::Zero(4, 4)));
  const Point hu = make_psd(4)->barrier_hessian_apply(Point::sym(Mat::Identity(4, 4)), u);
  EXPECT_LT((hu.x - u.x).norm(), 1e-14);
}

GTEST_TEST(SetTest, BarrierRejectsExteriorPoints) {
  EXPECT_THROW(make_orthant(2)->barrier_value(Point::vector(Eigen::Vector2d(1, 0))), BoundaryOrExterior);
  EXPECT_THROW(make_soc3()->barrier_gradient(row_point(1, {1, 0})), BoundaryOrExterior);
}

GTEST_TEST(SetTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 50; ++k) {
      const Point p = random_interior(rng, *s);
      const Vec g = to_flat(s->barrier_gradient(p));
      const Vec pf = to_flat(p);
      Vec fd(pf.size());
      for (Eigen::Index i = 0; i < pf.size(); ++i) {
        const double h = 1e-6 * (1.0 + pf.norm());
        Vec a = pf, b = pf;
        a(i) += h;
        b(i) -= h;
        const Point pa = from_flat(p, a), pb = from_flat(p, b);
        if (!s->is_interior(pa) || !s->is_interior(pb)) {
          fd(i) = g(i);
          continue;
        }
        fd(i) = (s->barrier_value(pa) - s->barrier_value(pb)) / (2 * h);
      }
      EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm())) << label << " sample " << k;
    }
  }
}

GTEST_TEST(SetTest, HessianMatchesGradientDifferences) {
  std::mt19937_64 rng(3);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 20; ++k) {
      const Point p = random_interior(rng, *s);
      Point u = random_like(rng, p.zeros_like());
      u *= 1.0 / norm(u);
      double h = 1e-6 * (1.0 + norm(p));
      while (!s->is_interior(p + h * u) || !s->is_interior(p - h * u)) h *= 0.5;
      const Point fd = (1.0 / (2 * h)) * (s->barrier_gradient(p + h * u) - s->barrier_gradient(p - h * u));
      const Point hu = s->barrier_hessian_apply(p, u);
      EXPECT_LE(norm(hu - fd), 1e-6 * std::max(1.0, norm(hu))) << label;
    }
  }
}

GTEST_TEST(SetTest, HessianIsSelfAdjoint) {
  std::mt19937_64 rng(4);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 20; ++k) {
      const Point p = random_interior(rng, *s);
      const Point u = random_like(rng, p.zeros_like()), v = random_like(rng, p.zeros_like());
      const double a = inner(u, s->barrier_hessian_apply(p, v)), b = inner(v, s->barrier_hessian_apply(p, u));
      EXPECT_LE(std::abs(a - b), 1e-10 * (1 + std::abs(a))) << label;
    }
  }
}

GTEST_TEST(ProjectTest, Examples) {
  const Point o = make_orthant(2)->exact_project(Point::vector(Eigen::Vector2d(3, -4)));
  EXPECT_TRUE(o.vec() == Eigen::Vector2d(3, 0));

  const auto linf = make_linf(2);
  const Point l1 = linf->exact_project(row_point(0, {2, 0.5}));
  EXPECT_NEAR(l1.t, 1.0, 1e-15);
  EXPECT_NEAR((l1.x - row_point(0, {1, 0.5}).x).norm(), 0.0, 1e-15);
  const Point l2 = linf->exact_project(row_point(-3, {1, 1}));
  EXPECT_EQ(norm(l2), 0.0);
  EXPECT_EQ(linf_project(0, Eigen::Vector2d(2, 0.5)).k_star, 1);
  EXPECT_EQ(linf_project(5, Eigen::Vector2d(1, 1)).k_star, 0);
  EXPECT_EQ(linf_project(-3, Eigen::Vector2d(1, 1)).k_star, 2);

  const Point n = make_nuclear(1, 1)->exact_project(row_point(-5, {0}));
  EXPECT_EQ(norm(n), 0.0);
}

GTEST_TEST(ProjectTest, LinfBoundaryTiesAreFixedPoints) {
  const double t = 0.1 + 0.2;  // not exactly 0.3
  const Vec x = Eigen::Vector3d(0.3, -(0.1 + 0.2), 0.3);
  const LinfProjection p = linf_project(t, x);
  EXPECT_NEAR(p.t, t, 1e-16);
  EXPECT_LT((p.x - x).norm(), 1e-16);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 200; ++k) {
    Vec z(4);
    for (auto& e : z) e = nd(rng);
    const LinfProjection a = linf_project(nd(rng), z);
    const LinfProjection b = linf_project(a.t, a.x);
    EXPECT_NEAR(b.t, a.t, 1e-14);
    EXPECT_LT((b.x - a.x).norm(), 1e-14);
  }
}

GTEST_TEST(ProjectTest, ZeroMatrixPart) {
  const Point p = make_opnorm(2, 3)->exact_project(Point::scalar_matrix(-2.0, Mat::Zero(2, 3)));
  EXPECT_EQ(norm(p), 0.0);
  const Point q = make_opnorm(2, 3)->exact_project(Point::scalar_matrix(2.0, Mat::Zero(2, 3)));
  EXPECT_EQ(q.t, 2.0);
}

GTEST_TEST(ProjectTest, IdempotentAndNonexpansive) {
  std::mt19937_64 rng(5);
  for (const auto& [label, s] : all_sets()) {
    for (int k = 0; k < 50; ++k) {
      const Point z1 = random_like(rng, s->shape(), 2.0), z2 = random_like(rng, s->shape(), 2.0);
      const Point p1 = s->exact_project(z1), p2 = s->exact_project(z2);
      EXPECT_LE(norm(s->exact_project(p1) - p1), 1e-10 * (1 + norm(p1))) << label;
      EXPECT_LE(norm(p1 - p2), norm(z1 - z2) * (1 + 1e-12)) << label;
      // Firm nonexpansiveness.
      EXPECT_LE(inner(p1 - p2, p1 - p2), inner(p1 - p2, z1 - z2) + 1e-12 * (1 + inner(z1 - z2, z1 - z2))) << label;
    }
  }
}

GTEST_TEST(ProjectTest, MoreauIdentityForConePairs) {
  std::mt19937_64 rng(6);
  // (K#, K) pairs; the first three cones are self-dual.
  const std::vector<std::tuple<std::string, SmoothedSet, SmoothedSet>> pairs{
      {"orthant", make_orthant(4), make_orthant(4)},
      {"psd", make_psd(3), make_psd(3)},
      {"soc3", make_soc3(), make_soc3()},
      {"nuclear/opnorm", make_nuclear(2, 4), make_opnorm(2, 4)},
      {"nuclear/opnorm square", make_nuclear(3, 3), make_opnorm(3, 3)}};
  for (const auto& [label, dual, cone] : pairs) {
    for (int k = 0; k < 50; ++k) {
      const Point z = random_like(rng, cone->shape(), 2.0);
      const Point a = dual->exact_project(z), b = cone->exact_project(-z);
      EXPECT_LE(norm(a - b - z), 1e-10 * (1 + norm(z))) << label;
      EXPECT_LE(std::abs(inner(a, b)), 1e-10 * (1 + norm(z) * norm(z))) << label;
    }
  }
}

GTEST_TEST(ProjectTest, PolyhedronBox) {
  Mat a(4, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << 0, 0, -1, -1;
  const auto box = make_polyhedron(a, b);
  EXPECT_LT((box->exact_project(Point::vector(Eigen::Vector2d(2, -1))).vec() - Eigen::Vector2d(1, 0)).norm(), 1e-12);
  EXPECT_LT((box->interior_point().vec() - Eigen::Vector2d(0.5, 0.5)).norm(), 1e-8);
}

GTEST_TEST(DiagnoseTest, Examples) {
  EXPECT_TRUE(diagnose(*make_orthant(2), Point::vector(Eigen::Vector2d(3, -4))).differentiable);
  EXPECT_FALSE(diagnose(*make_psd(2), Point::sym(Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix())).differentiable);
  Mat x = Mat::Zero(2, 3);
  x(0, 0) = 2;
  EXPECT_TRUE(diagnose(*make_opnorm(2, 3), Point::scalar_matrix(5, x)).differentiable);
}

GTEST_TEST(DiagnoseTest, DifferentiableMatchesStrictComplementarity) {
  std::mt19937_64 rng(7);
  for (const auto& [label, s] : all_sets()) {
    if (s->kind() == SetKind::Polyhedron) continue;
    for (int k = 0; k < 50; ++k) {
      const Point z = random_like(rng, s->shape(), 2.0);
      const FaceDiagnostics d = diagnose(*s, z);
      if (d.strictly_complementary) {
        EXPECT_EQ(d.differentiable, *d.strictly_complementary) << label;
      }
    }
  }
  // Boundary points of each cone are not differentiable points of the projection.
  EXPECT_FALSE(diagnose(*make_orthant(2), Point::vector(Eigen::Vector2d(1, 0))).differentiable);
  EXPECT_FALSE(diagnose(*make_soc3(), row_point(1, {1, 0})).differentiable);
  EXPECT_FALSE(diagnose(*make_soc3(), row_point(0, {0, 0})).differentiable);
}

}  // namespace
}  // namespace ncvi
