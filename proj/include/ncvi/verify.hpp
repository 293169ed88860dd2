#pragma once

// Invariant and acceptance checks shared by the acceptance binary and the
// `check` subcommand. Expected values come from the oracles module.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ncvi/continuation.hpp"
#include "ncvi/oracles.hpp"
#include "ncvi/problems_io.hpp"

namespace ncvi::verify {

struct CheckResult {
  explicit CheckResult(std::string n) : name(std::move(n)) {}

  std::string name;
  bool pass = true;
  std::vector<std::string> details;

  void note(const std::string& s) { details.push_back(s); }
  void fail(const std::string& s) {
    pass = false;
    details.push_back("violation: " + s);
  }
};

inline std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << std::scientific << v;
  return os.str();
}

struct SetCase {
  std::string label;
  SmoothedSet set;
};

/// A random polyhedron {x : A x >= b} with unit rows around a known interior point.
inline SmoothedSet random_polyhedron(int n, int m, std::mt19937_64& rng) {
  Mat a = ncvi::detail::gaussian(rng, m, n);
  for (int i = 0; i < m; ++i) a.row(i).normalize();
  Vec xc(n);
  for (int i = 0; i < n; ++i) xc(i) = ncvi::detail::uniform(rng, -0.5, 0.5);
  Vec b = a * xc;
  for (int i = 0; i < m; ++i) b(i) -= ncvi::detail::uniform(rng, 0.5, 1.5);
  return make_polyhedron(a, b);
}

inline std::vector<SetCase> standard_sets(std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  return {{"orthant(3)", make_orthant(3)},       {"psd(3)", make_psd(3)},
          {"polyhedron(3,6)", random_polyhedron(3, 6, rng)},
          {"linf(3)", make_linf(3)},             {"opnorm(2,3)", make_opnorm(2, 3)},
          {"nuclear(2,3)", make_nuclear(2, 3)},  {"soc3", make_soc3()}};
}

inline Point random_point(const Point& shape, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd;
  Vec v(shape.dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * nd(rng);
  return from_flat(shape, v);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(ncvi::detail::uniform(rng, std::log(lo), std::log(hi)));
}

// ---------------------------------------------------------------------------
// Smoothing properties.

/// |p + mu^2 grad f(p) - z| <= 1e-11 (1 + |z|) for random z and log-uniform mu.
inline CheckResult smoothing_residual(int samples = 100, std::uint64_t seed = 1) {
  CheckResult res{"smoothing-residual"};
  std::mt19937_64 rng(seed);
  for (const auto& sc : standard_sets()) {
    double worst = 0, worst_cons = 0;
    for (int k = 0; k < samples; ++k) {
      const Point z = random_point(sc.set->shape(), rng, 2.0);
      const double mu = log_uniform(rng, 1e-4, 1.0);
      const SmoothingEval e = smooth_project(*sc.set, z, mu);
      const double rel = e.residual / (1.0 + norm(z));
      worst = std::max(worst, rel);
      worst_cons = std::max(worst_cons, e.consistency / (1.0 + norm(z)));
      if (!(rel <= 1e-11)) res.fail(sc.label + " residual " + fmt(rel) + " at mu " + fmt(mu));
    }
    res.note(sc.label + ": max relative residual " + fmt(worst) + ", certificate consistency " + fmt(worst_cons));
  }
  return res;
}

/// |p_mu(z) - p_nu(z)| <= sqrt(theta) |mu - nu| (1 + 1e-8) over a grid containing 0.
inline CheckResult lipschitz_in_mu(int points = 20, std::uint64_t seed = 2) {
  CheckResult res{"lipschitz"};
  std::mt19937_64 rng(seed);
  const std::vector<double> grid{0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0};
  for (const auto& sc : standard_sets()) {
    const double st = std::sqrt(sc.set->theta());
    double worst = 0;
    int violations = 0;
    for (int k = 0; k < points; ++k) {
      const Point z = random_point(sc.set->shape(), rng, 2.0);
      std::vector<Point> p;
      for (double mu : grid) p.push_back(smooth_project(*sc.set, z, mu).value);
      for (size_t i = 0; i < grid.size(); ++i)
        for (size_t j = i + 1; j < grid.size(); ++j) {
          const double bound = st * std::abs(grid[i] - grid[j]);
          const double d = norm(p[i] - p[j]);
          worst = std::max(worst, d / bound);
          if (!(d <= bound * (1.0 + 1e-8))) ++violations;
        }
    }
    if (violations) res.fail(sc.label + ": " + std::to_string(violations) + " pairs above the bound");
    res.note(sc.label + ": max |p_mu - p_nu| / (sqrt(theta)|mu - nu|) = " + fmt(worst, 4));
  }
  return res;
}

namespace detail {

/// D^2 p_mu(z)[d, d] from Richardson-extrapolated central differences of Dp_mu.
inline Point second_directional(const ConvexSet& set, const Point& z, const Point& d, double mu, double h) {
  auto central = [&](double s) {
    const Point a = smooth_derivative_apply(set, z + s * d, mu)(d);
    const Point b = smooth_derivative_apply(set, z - s * d, mu)(d);
    return (1.0 / (2.0 * s)) * (a - b);
  };
  const Point c1 = central(h), c2 = central(0.5 * h);
  return (4.0 / 3.0) * c2 - (1.0 / 3.0) * c1;
}

}  // namespace detail

/// |D^2 p_mu(z)[d, d]| <= 1/(4 mu) for unit d; the Orthant(1) supremum is attained at z = 0.
inline CheckResult curvature_bound(int points = 20, std::uint64_t seed = 3) {
  CheckResult res{"curvature"};
  std::mt19937_64 rng(seed);
  for (const auto& sc : standard_sets()) {
    double worst = 0;
    for (double mu : {1e-2, 1e-1, 1.0}) {
      for (int k = 0; k < points; ++k) {
        // Points at the scale of mu sit where the curvature concentrates.
        const Point z = random_point(sc.set->shape(), rng, k % 2 ? 2.0 * mu : 2.0);
        Point d = random_point(sc.set->shape(), rng, 1.0);
        d *= 1.0 / norm(d);
        const double c = norm(detail::second_directional(*sc.set, z, d, mu, 1e-3 * mu));
        worst = std::max(worst, 4.0 * mu * c);
        if (!(c <= (1.0 + 1e-4) / (4.0 * mu))) res.fail(sc.label + " curvature " + fmt(4.0 * mu * c, 6) + "/(4mu)");
      }
    }
    res.note(sc.label + ": max 4 mu |D^2 p[d,d]| = " + fmt(worst, 6));
  }
  const auto o1 = make_orthant(1);
  for (double mu : {1e-2, 1e-1, 1.0}) {
    double sup = 0;
    for (int i = -200; i <= 200; ++i) {
      const Point z = Point::vector(Vec::Constant(1, 0.05 * mu * i));
      const Point d = Point::vector(Vec::Ones(1));
      sup = std::max(sup, std::abs(detail::second_directional(*o1, z, d, mu, 1e-3 * mu).vec()(0)));
    }
    const double rel = std::abs(sup - 0.25 / mu) / (0.25 / mu);
    if (!(rel <= 1e-8)) res.fail("orthant(1) supremum off by " + fmt(rel) + " at mu " + fmt(mu));
    res.note("orthant(1) mu=" + fmt(mu, 1) + ": sup |p''| = " + fmt(sup, 10) + " vs 1/(4mu) = " + fmt(0.25 / mu, 10));
  }
  return res;
}

/// Fast-path action Dp_mu(z)[u] against the central difference of p_mu along u.
/// The error is taken relative to max(|Dp u|, |u|).
inline CheckResult derivative_fd(int cases = 50, std::uint64_t seed = 4) {
  CheckResult res{"derivatives"};
  std::mt19937_64 rng(seed);
  for (const auto& sc : standard_sets()) {
    double worst = 0, worst_abs = 0;
    for (int k = 0; k < cases; ++k) {
      const Point z = random_point(sc.set->shape(), rng, 2.0);
      const double mu = log_uniform(rng, 1e-3, 1.0);
      Point u = random_point(sc.set->shape(), rng, 1.0);
      u *= 1.0 / norm(u);
      const double eps = 1e-6 * (1.0 + norm(z));
      const Point fd = (1.0 / (2.0 * eps)) * (smooth_project(*sc.set, z + eps * u, mu).value -
                                              smooth_project(*sc.set, z - eps * u, mu).value);
      const Point act = smooth_derivative_apply(*sc.set, z, mu)(u);
      // Dp_mu has operator norm at most 1, so |u| bounds the scale of the action;
      // dividing by a much smaller |Dp u| would measure the difference quotient's
      // rounding floor rather than the fast path.
      const double err = norm(act - fd);
      const double rel = err / std::max(norm(fd), norm(u));
      worst = std::max(worst, rel);
      worst_abs = std::max(worst_abs, err);
      if (!(rel <= 1e-5)) res.fail(sc.label + " rel err " + fmt(rel) + " (abs " + fmt(err) + ", |Dp u| " + fmt(norm(fd)) + ") at mu " + fmt(mu));
    }
    res.note(sc.label + ": max rel err " + fmt(worst) + ", max abs err " + fmt(worst_abs));
  }
  return res;
}

struct LimitCase {
  std::string label;
  SmoothedSet set;
  Point zstar;
  Mat exact;  // D Pi(z*) from the oracles
};

inline std::vector<LimitCase> limit_cases(std::uint64_t seed = 5) {
  std::vector<LimitCase> out;
  {
    const Point z = Point::vector((Vec(3) << 1.3, -0.7, 0.9).finished());
    out.push_back({"orthant(3)", make_orthant(3), z, oracle::exact_derivative_orthant(z.vec())});
  }
  {
    std::mt19937_64 prng(seed);
    const Mat q = ncvi::detail::random_orthogonal(prng, 3);
    const Point z = Point::sym(q * Eigen::Vector3d(1.5, -0.8, 0.6).asDiagonal() * q.transpose());
    out.push_back({"psd(3)", make_psd(3), z, oracle::exact_derivative_psd(z)});
  }
  {
    std::mt19937_64 rng(seed);
    const SmoothedSet s = random_polyhedron(3, 6, rng);
    const auto& poly = dynamic_cast<const Polyhedron&>(*s);
    for (int k = 0; k < 1000; ++k) {
      const Point z = random_point(s->shape(), rng, 3.0);
      try {
        const auto bp = oracle::brute_project_polyhedron(poly.a(), poly.b(), z.vec());
        if (bp.active.empty()) continue;
        const Mat d = oracle::exact_derivative_polyhedron(poly.a(), poly.b(), z.vec(), 1e-6);
        out.push_back({"polyhedron(3,6)", s, z, d});
        break;
      } catch (const NotDifferentiable&) {
      }
    }
  }
  {
    const Vec x = (Vec(3) << 2.0, -1.5, 0.2).finished();
    const Point z = Point::scalar_matrix(0.5, x.transpose());
    out.push_back({"linf(3)", make_linf(3), z, oracle::exact_derivative_linf(0.5, x)});
  }
  std::mt19937_64 rng(seed + 1);
  const Mat u = ncvi::detail::random_orthogonal(rng, 2);
  const Mat v = ncvi::detail::random_orthogonal(rng, 3);
  const Mat x = svd_compose(u, Eigen::Vector2d(2.0, 0.5), v);
  {
    const Point z = Point::scalar_matrix(1.0, x);
    out.push_back({"opnorm(2,3)", make_opnorm(2, 3), z, oracle::exact_derivative_opnorm(z)});
  }
  {
    const Point z = Point::scalar_matrix(-1.0, -x);
    out.push_back({"nuclear(2,3)", make_nuclear(2, 3), z, oracle::exact_derivative_nuclear(z)});
  }
  {
    const Eigen::Vector3d z3(0.3, 1.0, 0.5);
    const Point z = Point::scalar_matrix(z3(0), z3.tail(2).transpose());
    out.push_back({"soc3", make_soc3(), z, oracle::exact_derivative_soc(z3)});
  }
  return out;
}

/// |Dp_mu(z) - D Pi(z*)| along (z - z*, mu) = h (d, 1), h halved four times.
/// `lo`, `hi` bound each successive error ratio.
inline CheckResult jacobian_limit(double lo = 0.3, double hi = 0.7, std::uint64_t seed = 6) {
  CheckResult res{"jacobian-limit"};
  std::mt19937_64 rng(seed);
  for (const auto& lc : limit_cases()) {
    Point d = random_point(lc.zstar, rng, 1.0);
    d *= 1.0 / norm(d);
    std::vector<double> err;
    for (int j = 0; j <= 4; ++j) {
      const double h = 1e-2 * std::pow(0.5, j);
      err.push_back((smooth_derivative_apply(*lc.set, lc.zstar + h * d, h).matrix() - lc.exact).norm());
    }
    std::string line = lc.label + ": errors";
    for (double e : err) line += " " + fmt(e, 2);
    line += "; ratios";
    bool ok = true;
    for (size_t j = 1; j < err.size(); ++j) {
      const double r = err[j] / err[j - 1];
      line += " " + fmt(r, 3);
      if (!(r >= lo && r <= hi)) ok = false;
    }
    if (!ok) res.fail(lc.label + " ratio outside [" + fmt(lo, 1) + ", " + fmt(hi, 1) + "]");
    res.note(line);
  }
  return res;
}

/// Correct versus mismatched barrier on the second-order cone at (0, 1, 0).
inline CheckResult appendix_b() {
  CheckResult res{"appendix-b"};
  const auto soc = make_soc3();
  Mat expect(3, 3);
  expect << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 0.5;
  const double mu = 1e-4, off = 1e-4;
  const Point z = Point::scalar_matrix(off, Eigen::RowVector2d(1.0 + off, off));
  const Mat lib = smooth_derivative_apply(*soc, z, mu).matrix();
  const double e1 = (lib - expect).cwiseAbs().maxCoeff();
  if (!(e1 <= 1e-3)) res.fail("correct-barrier limit off by " + fmt(e1));
  res.note("correct barrier Dp at mu = offset = 1e-4: max entry error " + fmt(e1));
  const Mat fd = oracle::fd_jacobian(oracle::project_soc, Eigen::Vector3d(0, 1, 0));
  const double e2 = (fd - expect).cwiseAbs().maxCoeff();
  if (!(e2 <= 1e-6)) res.fail("finite-difference Jacobian of the projection off by " + fmt(e2));
  res.note("fd Jacobian of Pi at (0,1,0): max entry error " + fmt(e2));
  const oracle::AppendixB ab = oracle::appendix_b_regression(1e-5, 1e-5);
  const double w33 = ab.wrong(2, 2);
  const double e3 = std::abs(w33 - 2.0 / 3.0);
  if (!(e3 <= 1e-6)) res.fail("mismatched barrier (3,3) entry off by " + fmt(e3));
  res.note("mismatched barrier (3,3) = " + fmt(w33, 10) + " (closed form " +
           fmt(wrong_barrier_soc_jacobian(1e-5)(2, 2), 10) + ")");
  const Mat at_star = smooth_derivative_apply(*soc, Point::scalar_matrix(0.0, Eigen::RowVector2d(1.0, 0.0)), 1e-5).matrix();
  const double gap = w33 - at_star(2, 2);
  if (!(std::abs(gap - 1.0 / 6.0) <= 1e-6)) res.fail("(3,3) gap " + fmt(gap, 10) + " is not 1/6");
  res.note("(3,3) gap between the limits = " + fmt(gap, 10));
  for (const auto& r : ab.checks)
    if (!r.pass) res.fail("oracle: " + r.quantity);
  return res;
}

/// Exact projections against the brute-force oracles and the Moreau identity.
inline CheckResult projection_oracles(std::uint64_t seed = 7) {
  CheckResult res{"projection-oracles"};
  std::mt19937_64 rng(seed);
  double worst_poly = 0;
  const std::vector<std::pair<int, int>> dims{{2, 4}, {3, 6}, {4, 8}, {5, 12}};
  for (int k = 0; k < 40; ++k) {
    const auto [n, m] = dims[k % dims.size()];
    const SmoothedSet s = random_polyhedron(n, m, rng);
    const auto& poly = dynamic_cast<const Polyhedron&>(*s);
    const Point z = random_point(s->shape(), rng, 3.0);
    const Vec o = oracle::brute_project_polyhedron(poly.a(), poly.b(), z.vec()).x;
    const double e = (s->exact_project(z).vec() - o).norm();
    worst_poly = std::max(worst_poly, e);
    if (!(e <= 1e-10)) res.fail("polyhedron(" + std::to_string(n) + "," + std::to_string(m) + ") error " + fmt(e));
  }
  res.note("polyhedron exact_project vs enumeration: max error " + fmt(worst_poly));

  int kmis = 0;
  double worst_linf = 0;
  std::normal_distribution<double> nd;
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + k % 6;
    Vec z(n);
    for (int i = 0; i < n; ++i) z(i) = 2.0 * nd(rng);
    const double zo = 3.0 * nd(rng);
    const LinfProjection lib = linf_project(zo, z);
    const oracle::LinfOracle orc = oracle::brute_project_linf(zo, z);
    if (lib.k_star != orc.k_star) ++kmis;
    const double e = std::max(std::abs(lib.t - orc.t), (lib.x - orc.x).cwiseAbs().maxCoeff());
    worst_linf = std::max(worst_linf, e);
  }
  if (kmis) res.fail(std::to_string(kmis) + " of 500 C_n inputs disagree on k*");
  if (!(worst_linf <= 1e-12)) res.fail("C_n values differ by " + fmt(worst_linf));
  res.note("C_n sorting formula vs exhaustive k: " + std::to_string(500 - kmis) + "/500 same k*, max value error " +
           fmt(worst_linf));

  double worst_moreau = 0, worst_orc = 0, worst_orth = 0, worst_member = 0;
  for (auto [m, n] : std::vector<std::pair<int, int>>{{2, 3}, {3, 3}, {3, 5}}) {
    const auto nuc = make_nuclear(m, n);
    const auto op = make_opnorm(m, n);
    for (int k = 0; k < 30; ++k) {
      const Point z = random_point(nuc->shape(), rng, 2.0);
      const Point a = nuc->exact_project(z);
      const Point b = op->exact_project(-z);
      worst_moreau = std::max(worst_moreau, norm(a - b - z));
      worst_orc = std::max(worst_orc, norm(a - oracle::project_nuclear(z)));
      worst_orth = std::max(worst_orth, std::abs(inner(a, b)));
      const double excess_a = thin_svd(a.x).sigma.sum() - a.t;
      const double excess_b = thin_svd(b.x).sigma(0) - b.t;
      worst_member = std::max({worst_member, excess_a, excess_b});
    }
  }
  if (!(worst_moreau <= 1e-10)) res.fail("Moreau identity error " + fmt(worst_moreau));
  if (!(worst_orc <= 1e-10)) res.fail("K# projection differs from the oracle by " + fmt(worst_orc));
  if (!(worst_orth <= 1e-10)) res.fail("Moreau parts not orthogonal: " + fmt(worst_orth));
  if (!(worst_member <= 1e-10)) res.fail("Moreau parts leave their cones by " + fmt(worst_member));
  res.note("K# Moreau identity max error " + fmt(worst_moreau) + ", vs oracle " + fmt(worst_orc) +
           ", orthogonality " + fmt(worst_orth) + ", membership " + fmt(worst_member));
  return res;
}

// ---------------------------------------------------------------------------
// Solver runs.

struct Run {
  std::string label;
  VIProblem prob;
  SolverConfig cfg;
  SolveReport rep;
  bool strict = true;
};

inline Run run_solver(std::string label, const ProblemManifest& man, Theta2Mode mode, bool strict,
                      bool record_svd = false) {
  Run r;
  r.label = std::move(label);
  r.prob = build_problem(man);
  r.cfg.theta2_mode = mode;
  r.cfg.theta2_const = 0.4;
  r.cfg.record_dh_svd = record_svd;
  r.strict = strict;
  r.rep = solve(r.prob, r.cfg);
  return r;
}

inline std::vector<ProblemManifest> strict_instances(std::uint64_t seed = 1) {
  return {generate_lcp(10, true, true, seed), generate_lcp(50, true, true, seed), generate_sdcp(10, 4, true, seed),
          generate_polyhedral_vi(6, 8, true, seed), generate_opnorm_vi(3, 4, true, seed)};
}

inline std::vector<ProblemManifest> degenerate_instances(std::uint64_t seed = 1) {
  return {generate_lcp(20, true, false, seed), generate_sdcp(10, 4, false, seed)};
}

struct RunSet {
  std::vector<Run> quadratic;   // strict instances, theta2 quadratic
  std::vector<Run> constant;    // strict instances, theta2 = 0.4
  std::vector<Run> degenerate;  // theta2 quadratic

  std::vector<const Run*> all() const {
    std::vector<const Run*> out;
    for (const auto* v : {&quadratic, &constant, &degenerate})
      for (const auto& r : *v) out.push_back(&r);
    return out;
  }
};

inline RunSet acceptance_runs(std::uint64_t seed = 1) {
  RunSet rs;
  for (const auto& m : strict_instances(seed)) {
    rs.quadratic.push_back(run_solver(m.name, m, Theta2Mode::Quadratic, true));
    rs.constant.push_back(run_solver(m.name, m, Theta2Mode::Constant, true));
  }
  for (const auto& m : degenerate_instances(seed))
    rs.degenerate.push_back(run_solver(m.name, m, Theta2Mode::Quadratic, false));
  return rs;
}

inline std::string run_line(const Run& r) {
  std::string s = r.label + ": " + to_string(r.rep.status) + ", " + std::to_string(r.rep.outer_iterations()) +
                  " outer, order " + fmt(r.rep.order_estimate, 3);
  if (r.prob.planted) s += ", |x - x*| " + fmt(norm(r.rep.solution.first - r.prob.planted->first), 2);
  return s;
}

inline CheckResult solver_correctness(const RunSet& rs) {
  CheckResult res{"solver"};
  for (const auto& r : rs.quadratic) {
    const double e = norm(r.rep.solution.first - r.prob.planted->first);
    if (r.rep.status != SolveStatus::Solved) res.fail(r.label + " status " + to_string(r.rep.status));
    if (!(e <= 1e-6)) res.fail(r.label + " |x - x*| = " + fmt(e));
    if (r.rep.outer_iterations() > 100) res.fail(r.label + " needed " + std::to_string(r.rep.outer_iterations()));
    res.note(run_line(r));
  }
  return res;
}

inline CheckResult local_order(const RunSet& rs) {
  CheckResult res{"local-order"};
  for (const auto& r : rs.quadratic) {
    if (!(r.rep.order_estimate >= 1.7)) res.fail(r.label + " quadratic mode order " + fmt(r.rep.order_estimate));
    res.note("theta2 quadratic  " + run_line(r));
  }
  for (const auto& r : rs.constant) {
    if (!(std::abs(r.rep.order_estimate - 1.0) <= 0.3))
      res.fail(r.label + " constant mode order " + fmt(r.rep.order_estimate) + " is not near 1");
    res.note("theta2 = 0.4      " + run_line(r));
  }
  return res;
}

inline CheckResult degenerate_behavior(const RunSet& rs) {
  CheckResult res{"degenerate"};
  for (const auto& r : rs.degenerate) {
    std::vector<double> h;
    for (const auto& s : r.rep.trace) h.push_back(s.h0_norm);
    const double r2 = loglinear_r2(h);
    if (r.rep.status != SolveStatus::Solved) res.fail(r.label + " status " + to_string(r.rep.status));
    if (!(r2 >= 0.95)) res.fail(r.label + " log-linear R^2 " + fmt(r2, 4));
    if (!(r.rep.order_estimate < 1.3)) res.fail(r.label + " order " + fmt(r.rep.order_estimate));
    res.note(run_line(r) + ", R^2 of log |H0| " + fmt(r2, 4));
  }
  return res;
}

/// Post-hoc scan: inexactness contracts, neighbourhood membership, strict mu decrease.
inline CheckResult contract_audit(const std::vector<const Run*>& runs) {
  CheckResult res{"residual-contracts"};
  int iterations = 0, violations = 0;
  for (const Run* r : runs) {
    const auto& tr = r->rep.trace;
    for (size_t i = 0; i < tr.size(); ++i) {
      const IterateState& s = tr[i];
      ++iterations;
      auto bad = [&](const std::string& what) {
        ++violations;
        res.fail(r->label + " k=" + std::to_string(s.k) + ": " + what);
      };
      if (std::isfinite(s.lin_residual) && !(s.lin_residual <= s.theta1 * s.h_norm))
        bad("|r1| " + fmt(s.lin_residual) + " > theta1 |H_mu|");
      if (std::isfinite(s.lin_residual2) && !(s.lin_residual2 <= s.theta2 * s.h0_norm))
        bad("|r2| " + fmt(s.lin_residual2) + " > theta2 |H0|");
      if (s.mu > 0 && !(s.merit <= r->rep.beta * s.mu)) bad("merit above beta mu");
      if (s.mu == 0 && !(s.merit <= r->rep.tol_h0)) bad("terminal merit above tolerance");
      if (i > 0 && !(s.mu < tr[i - 1].mu)) bad("mu did not decrease");
    }
  }
  res.note(std::to_string(runs.size()) + " runs, " + std::to_string(iterations) + " iterates, " +
           std::to_string(violations) + " violations");
  return res;
}

/// Smallest singular value of the dense DH_mu at trajectory points of monotone problems.
inline CheckResult nonsingularity(int points = 100, std::uint64_t seed = 8) {
  CheckResult res{"nonsingularity"};
  std::vector<std::pair<const VIProblem*, std::pair<PairPoint, double>>> samples;
  std::vector<Run> runs;
  runs.reserve(64);
  for (std::uint64_t s = seed; static_cast<int>(samples.size()) < points && s < seed + 50; ++s) {
    const ProblemManifest man = s % 3 == 0   ? generate_sdcp(6, 3, s % 2 == 0, s)
                                : s % 3 == 1 ? generate_lcp(15, false, s % 2 == 0, s)
                                             : generate_polyhedral_vi(5, 7, true, s);
    runs.push_back(run_solver(man.name, man, Theta2Mode::Quadratic, true));
    for (const auto& st : runs.back().rep.trace)
      if (st.mu > 0 && static_cast<int>(samples.size()) < points)
        samples.push_back({&runs.back().prob, {st.w, st.mu}});
  }
  double smin = std::numeric_limits<double>::infinity();
  for (const auto& [prob, wm] : samples) {
    const Mat dh = assemble_dh(*prob, wm.first, wm.second);
    const double s = Eigen::JacobiSVD<Mat>(dh).singularValues().minCoeff();
    smin = std::min(smin, s);
    if (!(s > 1e-12)) res.fail(prob->name + " sigma_min " + fmt(s) + " at mu " + fmt(wm.second));
  }
  if (static_cast<int>(samples.size()) < points) res.fail("only " + std::to_string(samples.size()) + " samples");
  res.note(std::to_string(samples.size()) + " trajectory points, smallest sigma_min(DH) = " + fmt(smin));
  return res;
}

struct NamedCheck {
  std::string name;
  std::function<CheckResult()> run;
};

/// The `check` subcommand suite.
inline std::vector<NamedCheck> check_suite() {
  auto runs = std::make_shared<std::optional<RunSet>>();
  auto get = [runs]() -> const RunSet& {
    if (!*runs) *runs = acceptance_runs();
    return **runs;
  };
  return {{"smoothing-residual", [] { return smoothing_residual(); }},
          {"lipschitz", [] { return lipschitz_in_mu(); }},
          {"curvature", [] { return curvature_bound(); }},
          {"derivatives", [] { return derivative_fd(); }},
          {"jacobian-limit", [] { return jacobian_limit(); }},
          {"appendix-b", [] { return appendix_b(); }},
          {"projection-oracles", [] { return projection_oracles(); }},
          {"solver", [get] { return solver_correctness(get()); }},
          {"local-order", [get] { return local_order(get()); }},
          {"degenerate", [get] { return degenerate_behavior(get()); }},
          {"residual-contracts", [get] { return contract_audit(get().all()); }},
          {"nonsingularity", [] { return nonsingularity(); }}};
}

}  // namespace ncvi::verify
