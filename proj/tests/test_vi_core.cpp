#include "ncvi/vi_core.hpp"

#include <random>

#include <gtest/gtest.h>

namespace ncvi {
namespace {

// F(x) = M x + q on flat coordinates.
VIProblem affine_problem(SmoothedSet set, const Mat& m, const Vec& q) {
  VIProblem p;
  const Point shape = set->shape();
  p.set = std::move(set);
  p.map.eval = [m, q, shape](const Point& x) { return from_flat(shape, m * to_flat(x) + q); };
  p.map.jacobian_apply = [m, shape](const Point&, const Point& u) { return from_flat(shape, m * to_flat(u)); };
  p.map.affine = true;
  return p;
}

VIProblem scalar_problem(double q) { return affine_problem(make_orthant(1), Mat::Ones(1, 1), Vec::Constant(1, q)); }

PairPoint scalar_pair(double x, double y) {
  return {Point::vector(Vec::Constant(1, x)), Point::vector(Vec::Constant(1, y))};
}

Mat random_monotone(std::mt19937_64& rng, int d, double delta) {
  std::normal_distribution<double> nd;
  Mat a(d, d), s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      a(i, j) = nd(rng);
      s(i, j) = nd(rng);
    }
  return a.transpose() * a / d + delta * Mat::Identity(d, d) + 0.5 * (s - s.transpose());
}

PairPoint random_pair(std::mt19937_64& rng, const Point& shape, double scale) {
  std::normal_distribution<double> nd;
  Vec v(2 * shape.dim());
  for (auto& e : v) e = scale * nd(rng);
  return from_flat(PairPoint{shape, shape}, v);
}

std::vector<VIProblem> monotone_problems(std::mt19937_64& rng) {
  std::vector<VIProblem> out;
  out.push_back(affine_problem(make_orthant(4), random_monotone(rng, 4, 0.0), Vec::Zero(4)));
  out.push_back(affine_problem(make_psd(3), random_monotone(rng, 6, 0.1), Vec::Zero(6)));
  out.push_back(affine_problem(make_linf(2), random_monotone(rng, 3, 0.0), Vec::Zero(3)));
  out.push_back(affine_problem(make_opnorm(2, 3), random_monotone(rng, 7, 0.0), Vec::Zero(7)));
  out.push_back(affine_problem(make_nuclear(2, 2), random_monotone(rng, 5, 0.0), Vec::Zero(5)));
  out.push_back(affine_problem(make_soc3(), random_monotone(rng, 3, 0.0), Vec::Zero(3)));
  Mat a(4, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1;
  out.push_back(affine_problem(make_polyhedron(a, Eigen::Vector4d(0, 0, -1, -1)), random_monotone(rng, 2, 0.0),
                               Vec::Zero(2)));
  return out;
}

GTEST_TEST(ResidualTest, Examples) {
  const VIProblem p = scalar_problem(-1);
  const Residuals r0 = smoothed_residual(p, scalar_pair(1, 0), 0.0);
  EXPECT_EQ(r0.merit, 0.0);
  EXPECT_EQ(r0.h0_norm, 0.0);
  const Residuals r1 = smoothed_residual(p, scalar_pair(1, 0), 1.0);
  EXPECT_NEAR(r1.phi.vec()(0), 1 - 0.5 * (1 + std::sqrt(5.0)), 1e-15);
  EXPECT_NEAR(r1.phi.vec()(0), -0.618, 1e-3);
}

GTEST_TEST(ResidualTest, NaturalMapIsZeroAtSolution) {
  const VIProblem p = scalar_problem(-1);
  EXPECT_EQ(norm(natural_map(p, scalar_pair(1, 0))), 0.0);
  EXPECT_GT(norm(natural_map(p, scalar_pair(0, 0))), 0.0);
}

GTEST_TEST(ResidualTest, MeritBoundsAndContinuity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ud(0, 1);
  for (const VIProblem& p : monotone_problems(rng)) {
    const double st = std::sqrt(p.set->theta());
    for (int k = 0; k < 30; ++k) {
      const PairPoint w = random_pair(rng, p.set->shape(), 1.0);
      const double mu = ud(rng), nu = ud(rng);
      const Residuals r = smoothed_residual(p, w, mu);
      EXPECT_GE(r.merit, 0.0);
      EXPECT_LE(r.h0_norm - r.merit, st * mu + 1e-12);
      EXPECT_LE(std::abs(merit(p, w, mu) - merit(p, w, nu)), st * std::abs(mu - nu) * (1 + 1e-8) + 1e-13);
    }
  }
}

GTEST_TEST(NeighborhoodTest, Examples) {
  const VIProblem p = scalar_problem(-1);
  for (double mu : {1e-6, 0.1, 1.0, 10.0}) EXPECT_TRUE(in_neighborhood(p, scalar_pair(1, 0), 1.01, mu));
  EXPECT_FALSE(in_neighborhood(p, scalar_pair(2, 2), 3.0, 0.0));
  EXPECT_DOUBLE_EQ(merit(p, scalar_pair(2, 2), 1.0), 2.0);
  EXPECT_TRUE(in_neighborhood(p, scalar_pair(2, 2), 3.0, 1.0));
  EXPECT_FALSE(in_neighborhood(p, scalar_pair(2, 2), 1.9, 1.0));
}

GTEST_TEST(DhApplyTest, Examples) {
  const VIProblem p = scalar_problem(0);
  const PairPoint w = scalar_pair(0.7, 0.7);
  const PairPoint r = dh_apply(p, w, 0.3, scalar_pair(1, 1));
  EXPECT_DOUBLE_EQ(r.first.vec()(0), 1.0);
  EXPECT_DOUBLE_EQ(r.second.vec()(0), 0.0);
  EXPECT_EQ(norm(dh_apply(p, w, 0.3, scalar_pair(0, 0))), 0.0);
}

GTEST_TEST(DhApplyTest, LinearAndMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (const VIProblem& p : monotone_problems(rng)) {
    for (double mu : {0.05, 0.5}) {
      const PairPoint w = random_pair(rng, p.set->shape(), 1.0);
      const DHOperator dh(p, w, mu);
      const Vec a = Vec::Random(dh.dim()), b = Vec::Random(dh.dim());
      EXPECT_LE((dh.apply_flat(2 * a - b) - 2 * dh.apply_flat(a) + dh.apply_flat(b)).norm(), 1e-12 * (1 + a.norm()));
      const Mat dense = dh.dense();
      Mat fd(dense.rows(), dense.cols());
      const Vec wf = to_flat(w);
      const double eps = 1e-6 * (1 + wf.norm());
      for (Eigen::Index j = 0; j < wf.size(); ++j) {
        Vec wp = wf, wm = wf;
        wp(j) += eps;
        wm(j) -= eps;
        fd.col(j) = (to_flat(h_vector(smoothed_residual(p, from_flat(w, wp), mu, false))) -
                     to_flat(h_vector(smoothed_residual(p, from_flat(w, wm), mu, false)))) /
                    (2 * eps);
      }
      EXPECT_LE((dense - fd).norm(), 1e-5 * dense.norm());
    }
  }
}

GTEST_TEST(DhApplyTest, NonsingularUnderMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-4, 0);
  int samples = 0;
  for (const VIProblem& p : monotone_problems(rng)) {
    for (int k = 0; k < 15; ++k) {
      const PairPoint w = random_pair(rng, p.set->shape(), 2.0);
      const double mu = std::pow(10.0, ud(rng));
      const Mat dh = assemble_dh(p, w, mu);
      const double smin = Eigen::JacobiSVD<Mat>(dh).singularValues().minCoeff();
      EXPECT_GT(smin, 1e-12) << "mu=" << mu;
      ++samples;
    }
  }
  EXPECT_GE(samples, 100);
}

GTEST_TEST(VIMapTest, AffineJacobianIsConstant) {
  std::mt19937_64 rng(4);
  const Mat m = random_monotone(rng, 3, 1.0);
  const VIProblem p = affine_problem(make_orthant(3), m, Vec::Zero(3));
  const Point u = Point::vector(Vec::Random(3));
  const Point a = p.map.jacobian_apply(Point::vector(Vec::Random(3)), u);
  const Point b = p.map.jacobian_apply(Point::vector(Vec::Random(3)), u);
  EXPECT_EQ(norm(a - b), 0.0);
  // Strong monotonicity with modulus 1.
  for (int k = 0; k < 1000; ++k) {
    const Point v = Point::vector(Vec::Random(3));
    EXPECT_GE(inner(p.map.jacobian_apply(v, v), v), (1 - 1e-12) * inner(v, v));
  }
}

}  // namespace
}  // namespace ncvi
