#pragma once

#include <functional>
#include <sstream>

#include "ncvi/sets.hpp"

namespace ncvi {

/// Data that certifies interiority of p_mu(z) with full relative accuracy,
/// independently of the rounding of p itself.
struct Certificate {
  Vec margins;  // slacks, eigenvalues of p, spectral values, or p itself
  Vec duals;    // multipliers lambda = mu^2 w / s for log-barrier rows
  // Spectral data of the argument (eigenvectors or singular vectors).
  Mat u, v;
  Vec spec_z;   // eigenvalues / singular values of the argument
  double t = 0; // reduced t for epigraphs
  Vec sigma;    // reduced singular values of p
  bool negated = false;  // nuclear: data refers to the operator-norm cone at -z
};

struct SmoothingEval {
  Point value;
  Certificate cert;
  int inner_newton_iters = 0;
  double residual = 0.0;     // |p + mu^2 grad f(p) - z| with barrier terms from the certificate
  double consistency = 0.0;  // mismatch between certificate and the rounded value
  double min_margin = 0.0;
};

namespace detail {

#ifdef NCVI_INJECT_CHKS_FAULT
inline constexpr double chks_half = 1.0;  // mutation build for the check suite
#else
inline constexpr double chks_half = 0.5;
#endif

/// ½(z + sqrt(z² + 4mu²)) without cancellation for z < 0.
inline double chks(double z, double mu) {
  const double r = std::hypot(z, 2.0 * mu);
  return z >= 0 ? chks_half * (z + r) : chks_half * (4.0 * mu * mu) / (r - z);
}

/// Same with 8mu², the spectral form of the second-order cone smoothing.
inline double chks8(double z, double mu) {
  const double r = std::sqrt(z * z + 8.0 * mu * mu);
  return z >= 0 ? 0.5 * (z + r) : (4.0 * mu * mu) / (r - z);
}

struct BarrierSolve {
  Vec y;    // p_mu(z) in flat coordinates
  Vec s;    // slacks
  Vec lam;  // multipliers
  int iters = 0;
  double residual = 0;
  double consistency = 0;
};

/// Solves y + mu² grad f(y) = z for f = -sum w_i log(a_i^T y - b_i) in the
/// variables (lambda, s) with y = z + A^T lambda, s = A y - b, lambda s = mu² w.
/// Iterates toward `tol`; once progress stalls, a point within `accept_tol` is
/// returned. Tiny mu puts slacks near mu² below the rounding level of A y - b,
/// which leaves a noise floor above `tol`.
///
/// A cold start at small mu lets the slacks collapse long before A y - b = s
/// holds, after which the boundary rule stalls every step. Small mu is
/// therefore reached through a decreasing sequence mu_j = mu_start / 10^j,
/// each stage warm-started from the previous one.
inline BarrierSolve solve_log_barrier(const LogBarrierRows& r, const Vec& z, double mu, double tol,
                                      double accept_tol) {
  const Mat& a = r.a;
  const Eigen::Index m = a.rows();
  const Mat g = a * a.transpose();
  const Vec c = a * z - r.b;
  const double mu_start = 1e-2 * (1.0 + c.cwiseAbs().maxCoeff());
  double mu_j = std::max(mu, mu_start);
  Vec target = mu_j * mu_j * r.w;
  Vec s = c.cwiseMax(mu_j);
  Vec lam = target.cwiseQuotient(s);
  for (Eigen::Index i = 0; i < m; ++i)
    if (r.w(i) == 0) lam(i) = 0;

  auto residuals = [&](const Vec& l, const Vec& sl, Vec& rp, Vec& rc) {
    const Vec y = z + a.transpose() * l;
    rp = a * y - r.b - sl;
    rc = l.cwiseProduct(sl) - target;
  };
  // Primal residual |A^T (lambda - mu² w / s)| and consistency |A y - b - s|.
  auto measure = [&](const Vec& l, const Vec& sl, double& res, double& cons) {
    const Vec y = z + a.transpose() * l;
    res = (a.transpose() * (l - target.cwiseQuotient(sl))).norm();
    cons = (a * y - r.b - sl).norm();
  };

  double res = 0, cons = 0;
  int total = 0;
  // Newton iterations on the current stage; returns the iteration count.
  auto newton = [&](double stage_tol, double stage_accept, int cap) {
    measure(lam, s, res, cons);
    int stall = 0;
    double best = res + cons;
    int it = 0;
    for (; it < cap; ++it) {
      if (res <= 1e-3 * stage_tol && cons <= 1e-3 * stage_tol) break;
      Vec rp, rc;
      residuals(lam, s, rp, rc);
      Mat k = g;
      Vec d = s.cwiseQuotient(lam.cwiseMax(std::numeric_limits<double>::min()));
      for (Eigen::Index i = 0; i < m; ++i)
        if (r.w(i) == 0) d(i) = 1.0;
      k.diagonal() += d;
      // Symmetric Jacobi scaling keeps the factorization accurate when d spans many decades.
      const Vec sc = k.diagonal().cwiseSqrt().cwiseInverse();
      const Mat ks = sc.asDiagonal() * k * sc.asDiagonal();
      Vec rhs = -rc.cwiseQuotient(lam.cwiseMax(std::numeric_limits<double>::min())) - rp;
      for (Eigen::Index i = 0; i < m; ++i)
        if (r.w(i) == 0) rhs(i) = -rp(i);
      Eigen::LDLT<Mat> ldlt(ks);
      Vec dl = sc.cwiseProduct(ldlt.solve(sc.cwiseProduct(rhs)));
      for (Eigen::Index i = 0; i < m; ++i)
        if (r.w(i) == 0) dl(i) = 0;
      const Vec ds = g * dl + rp;
      double step = 1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (r.w(i) == 0) continue;
        if (dl(i) < 0) step = std::min(step, -0.95 * lam(i) / dl(i));
        if (ds(i) < 0) step = std::min(step, -0.95 * s(i) / ds(i));
      }
      Vec ln = lam + step * dl, sn = s + step * ds;
      for (Eigen::Index i = 0; i < m; ++i)
        if (r.w(i) == 0) ln(i) = 0;
      lam = ln;
      s = sn;
      measure(lam, s, res, cons);
      if (res + cons < 0.5 * best) {
        best = res + cons;
        stall = 0;
      } else if (++stall >= 4 && res <= stage_accept && cons <= stage_accept) {
        break;
      }
    }
    return it;
  };

  while (mu_j > mu) {
    total += newton(1e3 * tol, 1e3 * accept_tol, 50);
    mu_j = std::max(mu, 0.1 * mu_j);
    target = mu_j * mu_j * r.w;
  }
  total += newton(tol, accept_tol, 100);

  BarrierSolve out;
  out.y = z + a.transpose() * lam;
  out.s = s;
  out.lam = lam;
  out.iters = total;
  out.residual = res;
  out.consistency = cons;
  if (!(res <= accept_tol && cons <= accept_tol) || !(s.array() > 0).all()) {
    std::ostringstream msg;
    msg << "log-barrier smoothing: residual " << res << ", consistency " << cons << " after " << total
        << " iterations";
    throw InnerNewtonDiverged(msg.str());
  }
  return out;
}

/// Rows of the reduced barrier -sum log(t - sigma_i) - sum log(t + sigma_i)
/// - (n - m) log t in the variables (t, sigma).
inline LogBarrierRows opnorm_reduced_rows(int m, int n) {
  LogBarrierRows r = linf_rows(m);
  if (n > m) {
    r.a.conservativeResize(2 * m + 1, Eigen::NoChange);
    r.a.row(2 * m).setZero();
    r.a(2 * m, 0) = 1.0;
    r.b.conservativeResize(2 * m + 1);
    r.b(2 * m) = 0.0;
    r.w.conservativeResize(2 * m + 1);
    r.w(2 * m) = n - m;
  }
  return r;
}

inline double smoothing_tol(const Point& z) { return 1e-11 * (1.0 + norm(z)); }

/// Gradient of the operator-norm barrier at p = (t, u Diag(sigma) v1^T) written
/// in the certificate slacks t - sigma_i, t + sigma_i and t.
inline Point opnorm_gradient_certified(int m, int n, const Certificate& c) {
  const Vec lo = c.margins.head(m).cwiseInverse();
  const Vec hi = c.margins.segment(m, m).cwiseInverse();
  double gt = -(lo.sum() + hi.sum());
  if (n > m) gt -= (n - m) / c.margins(2 * m);
  return Point::scalar_matrix(gt, svd_compose(c.u, lo - hi, c.v));
}

inline SmoothingEval smooth_opnorm(int m, int n, const Point& z, double mu) {
  const ThinSvd f = thin_svd(z.x);
  Vec zr(m + 1);
  zr(0) = z.t;
  zr.tail(m) = f.sigma;
  const LogBarrierRows rows = opnorm_reduced_rows(m, n);
  const double tol = smoothing_tol(z);
  BarrierSolve bs = solve_log_barrier(rows, zr, mu, 1e-2 * tol, tol);
  SmoothingEval e;
  e.cert.margins = bs.s;
  e.cert.duals = bs.lam;
  e.cert.u = f.u;
  e.cert.v = f.v;
  e.cert.spec_z = f.sigma;
  e.cert.t = bs.y(0);
  e.cert.sigma = bs.y.tail(m);
  e.value = Point::scalar_matrix(e.cert.t, svd_compose(f.u, e.cert.sigma, f.v));
  e.inner_newton_iters = bs.iters;
  const Point g = opnorm_gradient_certified(m, n, e.cert);
  e.residual = norm(e.value + (mu * mu) * g - z);
  e.consistency = bs.consistency;
  e.min_margin = bs.s.minCoeff();
  return e;
}

}  // namespace detail

/// Barrier-based smoothing p_mu(z): the interior solution of
/// p + mu^2 grad f(p) = z, and the exact projection at mu = 0.
inline SmoothingEval smooth_project(const ConvexSet& set, const Point& z, double mu) {
  require(mu >= 0, "smooth_project: mu >= 0");
  require(z.same_shape(set.shape()), "smooth_project: shape mismatch");
  SmoothingEval e;
  if (mu == 0) {
    e.value = set.exact_project(z);
    return e;
  }
  const double mu2 = mu * mu;
  const double tol = detail::smoothing_tol(z);
  switch (set.kind()) {
    case SetKind::Orthant: {
      const Vec v = z.vec();
      Vec p(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) p(i) = detail::chks(v(i), mu);
      e.value = Point::vector(p);
      e.cert.margins = p;
      e.residual = (p - mu2 * p.cwiseInverse() - v).norm();
      e.min_margin = p.minCoeff();
      break;
    }
    case SetKind::PsdCone: {
      const SymEigen ez = sym_eigen(z.x);
      Vec p(ez.lambda.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = detail::chks(ez.lambda(i), mu);
      e.value = Point::sym(ez.q * p.asDiagonal() * ez.q.transpose());
      e.cert.margins = p;
      e.cert.u = ez.q;
      e.cert.spec_z = ez.lambda;
      const Mat pinv = ez.q * p.cwiseInverse().asDiagonal() * ez.q.transpose();
      e.residual = (e.value.x - mu2 * pinv - z.x).norm();
      e.min_margin = p.minCoeff();
      break;
    }
    case SetKind::Polyhedron:
    case SetKind::LinfEpigraph: {
      const LogBarrierRows& rows = set.kind() == SetKind::Polyhedron
                                       ? static_cast<const Polyhedron&>(set).rows()
                                       : static_cast<const LinfEpigraph&>(set).rows();
      detail::BarrierSolve bs = detail::solve_log_barrier(rows, to_flat(z), mu, 1e-2 * tol, tol);
      e.value = from_flat(z, bs.y);
      e.cert.margins = bs.s;
      e.cert.duals = bs.lam;
      e.inner_newton_iters = bs.iters;
      e.residual = (bs.y + mu2 * rows.gradient(bs.s) - to_flat(z)).norm();
      e.consistency = bs.consistency;
      e.min_margin = bs.s.minCoeff();
      break;
    }
    case SetKind::OpNormEpigraph: {
      const auto& k = static_cast<const OpNormEpigraph&>(set);
      e = detail::smooth_opnorm(k.m(), k.n(), z, mu);
      break;
    }
    case SetKind::NuclearEpigraph: {
      const auto& k = static_cast<const NuclearEpigraph&>(set).polar_partner();
      SmoothingEval q = detail::smooth_opnorm(k.m(), k.n(), -z, mu);
      e.value = q.value + z;
      e.cert = q.cert;
      e.cert.negated = true;
      e.inner_newton_iters = q.inner_newton_iters;
      // grad f#(p) = -xhat with xhat = q / mu^2; the consistency of xhat is
      // |grad f(xhat) + p| = |q + mu^2 grad f(q) + z|, the residual of q.
      const Point xhat = (1.0 / mu2) * q.value;
      e.residual = norm(e.value - mu2 * xhat - z);
      e.consistency = q.residual + q.consistency;
      e.min_margin = q.min_margin;
      break;
    }
    case SetKind::SecondOrderCone3: {
      const double r = z.x.norm();
      const double l1 = z.t - r, l2 = z.t + r;
      const double p1 = detail::chks8(l1, mu), p2 = detail::chks8(l2, mu);
      const Mat dir = r > 0 ? Mat(z.x / r) : Mat(Mat::Zero(1, 2));
      e.value = Point::scalar_matrix(0.5 * (p1 + p2), 0.5 * (p2 - p1) * dir);
      e.cert.margins = Vec(2);
      e.cert.margins << p1, p2;
      e.cert.spec_z = Vec(2);
      e.cert.spec_z << l1, l2;
      const double d = p1 * p2;
      const Point g = Point::scalar_matrix(-2.0 * e.value.t / d, 2.0 * e.value.x / d);
      e.residual = norm(e.value + mu2 * g - z);
      e.min_margin = std::min(p1, p2);
      break;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------

/// The action u -> Dp_mu(z)[u] = (I + mu^2 hess f(p_mu(z)))^{-1} u with all
/// factorizations cached at construction.
class DerivativeApply {
 public:
  DerivativeApply(Point shape, std::function<Point(const Point&)> f) : shape_(std::move(shape)), f_(std::move(f)) {}

  Point operator()(const Point& u) const { return f_(u); }
  Point apply(const Point& u) const { return f_(u); }
  const Point& shape() const { return shape_; }

  /// Dense matrix in flat coordinates (diagnostics only).
  Mat matrix() const {
    const Eigen::Index d = shape_.dim();
    Mat out(d, d);
    for (Eigen::Index j = 0; j < d; ++j) out.col(j) = to_flat(f_(from_flat(shape_, Vec::Unit(d, j))));
    return out;
  }

 private:
  Point shape_;
  std::function<Point(const Point&)> f_;
};

namespace detail {

/// (I + A^T diag(lambda/s) A)^{-1} = I - A^T (diag(s/lambda) + A A^T)^{-1} A.
inline std::function<Vec(const Vec&)> log_barrier_resolvent(const LogBarrierRows& r, const Vec& s, const Vec& lam) {
  const Eigen::Index m = r.a.rows();
  Mat k = r.a * r.a.transpose();
  Vec d(m);
  for (Eigen::Index i = 0; i < m; ++i) d(i) = r.w(i) == 0 ? std::numeric_limits<double>::infinity() : s(i) / lam(i);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::isfinite(d(i))) keep.push_back(i);
  const Eigen::Index mk = static_cast<Eigen::Index>(keep.size());
  Mat ak(mk, r.a.cols());
  Vec dk(mk);
  for (Eigen::Index j = 0; j < mk; ++j) {
    ak.row(j) = r.a.row(keep[j]);
    dk(j) = d(keep[j]);
  }
  Mat kk = ak * ak.transpose();
  kk.diagonal() += dk;
  const Vec sc = kk.diagonal().cwiseSqrt().cwiseInverse();
  const Mat ks = sc.asDiagonal() * kk * sc.asDiagonal();
  auto ldlt = std::make_shared<Eigen::LDLT<Mat>>(ks);
  return [ak, sc, ldlt](const Vec& u) -> Vec {
    const Vec rhs = sc.cwiseProduct(ak * u);
    return u - ak.transpose() * sc.cwiseProduct(ldlt->solve(rhs));
  };
}

/// Structured solve of (I + mu^2 hess f(p)) h = w for the operator-norm
/// barrier in the rotated frame w_bar = u^T w v.
inline std::function<Point(const Point&)> opnorm_resolvent(int m, int n, const Certificate& c, double mu) {
  const double mu2 = mu * mu;
  const double t = c.t;
  const Vec& sg = c.sigma;
  Vec kap(m);
  for (int i = 0; i < m; ++i) kap(i) = 1.0 / (c.margins(i) * c.margins(m + i));
  // Coupled system in (h_o, h_11, ..., h_mm).
  Mat k = Mat::Zero(m + 1, m + 1);
  double k00 = 1.0 + mu2 * (n - m) / (t * t);
  for (int i = 0; i < m; ++i) {
    k00 += mu2 * kap(i) * kap(i) * 2.0 * (t * t + sg(i) * sg(i));
    const double off = -4.0 * mu2 * t * kap(i) * kap(i) * sg(i);
    k(0, 1 + i) = off;
    k(1 + i, 0) = off;
    k(1 + i, 1 + i) = 1.0 + mu2 * (4.0 * kap(i) * kap(i) * sg(i) * sg(i) + 2.0 * kap(i));
  }
  k(0, 0) = k00;
  const Vec sc = k.diagonal().cwiseSqrt().cwiseInverse();
  auto ldlt = std::make_shared<Eigen::LDLT<Mat>>(sc.asDiagonal() * k * sc.asDiagonal());
  const Mat u = c.u, v = c.v;
  return [=](const Point& w) -> Point {
    const Mat wb = u.transpose() * w.x * v;
    Mat hb(m, n);
    Vec rhs(m + 1);
    rhs(0) = w.t;
    for (int i = 0; i < m; ++i) rhs(1 + i) = wb(i, i);
    const Vec sol = sc.cwiseProduct(ldlt->solve(sc.cwiseProduct(rhs)));
    for (int i = 0; i < m; ++i) hb(i, i) = sol(1 + i);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        const double ki = kap(i), kj = kap(j), si = sg(i), sj = sg(j);
        const double a11 = 1.0 + 2.0 * mu2 * (ki + ki * kj * sj * sj);
        const double a22 = 1.0 + 2.0 * mu2 * (kj + ki * kj * si * si);
        const double a12 = 2.0 * mu2 * ki * kj * si * sj;
        const double det = 1.0 + 2.0 * mu2 * (ki + kj) + 2.0 * mu2 * ki * kj * (si * si + sj * sj) +
                           4.0 * mu2 * mu2 * ki * kj * (1.0 + ki * si * si + kj * sj * sj);
        const double r1 = wb(i, j), r2 = wb(j, i);
        hb(i, j) = (a22 * r1 - a12 * r2) / det;
        hb(j, i) = (a11 * r2 - a12 * r1) / det;
      }
    for (int i = 0; i < m; ++i)
      for (int j = m; j < n; ++j) hb(i, j) = wb(i, j) / (1.0 + 2.0 * mu2 * kap(i));
    return Point::scalar_matrix(sol(0), u * hb * v.transpose());
  };
}

}  // namespace detail

inline DerivativeApply smooth_derivative_apply(const ConvexSet& set, const Point& z, double mu,
                                               const SmoothingEval* eval = nullptr) {
  require(mu > 0, "smooth_derivative_apply: mu > 0");
  const Point shape = set.shape();
  switch (set.kind()) {
    case SetKind::Orthant: {
      const Vec v = z.vec();
      Vec d(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) d(i) = 0.5 * (1.0 + v(i) / std::hypot(v(i), 2.0 * mu));
      return DerivativeApply(shape, [d](const Point& u) { return Point::vector(d.cwiseProduct(u.vec())); });
    }
    case SetKind::PsdCone: {
      const SymEigen ez = sym_eigen(z.x);
      const Eigen::Index n = ez.lambda.size();
      Mat g(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const double li = ez.lambda(i), lj = ez.lambda(j);
          const double den = std::hypot(li, 2.0 * mu) + std::hypot(lj, 2.0 * mu);
          g(i, j) = 0.5 * (1.0 + (li + lj) / den);
        }
      const Mat q = ez.q;
      return DerivativeApply(shape, [q, g](const Point& u) {
        return Point::sym(q * g.cwiseProduct(q.transpose() * u.x * q) * q.transpose());
      });
    }
    case SetKind::Polyhedron:
    case SetKind::LinfEpigraph: {
      const SmoothingEval e = eval ? *eval : smooth_project(set, z, mu);
      const LogBarrierRows& rows = set.kind() == SetKind::Polyhedron
                                       ? static_cast<const Polyhedron&>(set).rows()
                                       : static_cast<const LinfEpigraph&>(set).rows();
      auto f = detail::log_barrier_resolvent(rows, e.cert.margins, e.cert.duals);
      return DerivativeApply(shape, [f, shape](const Point& u) { return from_flat(shape, f(to_flat(u))); });
    }
    case SetKind::OpNormEpigraph: {
      const auto& k = static_cast<const OpNormEpigraph&>(set);
      const SmoothingEval e = eval ? *eval : smooth_project(set, z, mu);
      return DerivativeApply(shape, detail::opnorm_resolvent(k.m(), k.n(), e.cert, mu));
    }
    case SetKind::NuclearEpigraph: {
      const auto& k = static_cast<const NuclearEpigraph&>(set).polar_partner();
      SmoothingEval e = eval ? *eval : smooth_project(set, z, mu);
      auto f = detail::opnorm_resolvent(k.m(), k.n(), e.cert, mu);
      return DerivativeApply(shape, [f](const Point& u) { return u - f(u); });
    }
    case SetKind::SecondOrderCone3: {
      const SmoothingEval e = eval ? *eval : smooth_project(set, z, mu);
      const double d = e.cert.margins(0) * e.cert.margins(1);
      Mat h(3, 3);
      for (int j = 0; j < 3; ++j)
        h.col(j) = to_flat(SecondOrderCone3::hessian_apply_with(e.value, d, from_flat(shape, Vec::Unit(3, j))));
      Mat k = Mat::Identity(3, 3) + mu * mu * h;
      auto lu = std::make_shared<Eigen::PartialPivLU<Mat>>(k);
      return DerivativeApply(shape, [lu, shape](const Point& u) { return from_flat(shape, lu->solve(to_flat(u))); });
    }
  }
  throw ContractViolation("smooth_derivative_apply: unknown set");
}

/// Generic route: dense assembly of I + mu^2 hess f(p) from the barrier's
/// Hessian action at the rounded p, followed by a dense solve.
inline DerivativeApply smooth_derivative_dense(const ConvexSet& set, const Point& z, double mu) {
  require(mu > 0, "smooth_derivative_dense: mu > 0");
  const Point p = smooth_project(set, z, mu).value;
  const Point shape = set.shape();
  const Eigen::Index d = shape.dim();
  Mat k(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    k.col(j) = to_flat(set.barrier_hessian_apply(p, from_flat(shape, Vec::Unit(d, j))));
  k = Mat::Identity(d, d) + mu * mu * k;
  auto lu = std::make_shared<Eigen::PartialPivLU<Mat>>(k);
  return DerivativeApply(shape, [lu, shape](const Point& u) { return from_flat(shape, lu->solve(to_flat(u))); });
}

/// Jacobian of the smoothing built from the mismatched barrier
/// -log(u^2 - |v|^2) - log(u - v_1) - log(u + v_1) at the point (0, 1, 0).
inline Mat wrong_barrier_soc_jacobian(double mu) {
  require(mu > 0, "wrong_barrier_soc_jacobian: mu > 0");
  const double a = std::sqrt(1.0 + 16.0 * mu * mu);
  Mat j(3, 3);
  j << 0.5, 0.5 / a, 0.0, 0.5 / a, 0.5, 0.0, 0.0, 0.0, 2.0 / 3.0;
  return j;
}

}  // namespace ncvi
