#pragma once

// Ground-truth computations for the test and acceptance suites. Nothing here
// calls into the set, smoothing, or solver code; only the ambient space helpers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncvi/space.hpp"

namespace ncvi::oracle {

struct OracleReport {
  std::string quantity;
  double oracle_value = 0;
  double candidate_value = 0;
  double abs_err = 0;
  double rel_err = 0;
  double tolerance = 0;
  bool relative = false;  // which error the tolerance applies to
  bool pass = false;

  double error() const { return relative ? rel_err : abs_err; }

  static OracleReport make(std::string quantity, double oracle_value, double candidate_value, double abs_err,
                           double scale, double tolerance, bool relative) {
    OracleReport r;
    r.quantity = std::move(quantity);
    r.oracle_value = oracle_value;
    r.candidate_value = candidate_value;
    r.abs_err = abs_err;
    r.rel_err = abs_err / std::max(scale, 1e-300);
    r.tolerance = tolerance;
    r.relative = relative;
    r.pass = r.error() <= tolerance;
    return r;
  }

  static OracleReport scalar(std::string quantity, double oracle_value, double candidate_value, double tolerance,
                             bool relative = false) {
    return make(std::move(quantity), oracle_value, candidate_value, std::abs(oracle_value - candidate_value),
                std::abs(oracle_value), tolerance, relative);
  }

  /// Matrices and vectors are summarized by their Frobenius norms.
  static OracleReport matrix(std::string quantity, const Mat& oracle_value, const Mat& candidate_value,
                             double tolerance, bool relative = true) {
    require(oracle_value.rows() == candidate_value.rows() && oracle_value.cols() == candidate_value.cols(),
            "OracleReport: shape mismatch");
    return make(std::move(quantity), oracle_value.norm(), candidate_value.norm(),
                (oracle_value - candidate_value).norm(), std::max(1.0, oracle_value.norm()), tolerance, relative);
  }

  static std::string csv_header() { return "quantity,oracle,candidate,abs_err,rel_err,tolerance,relative,pass"; }

  std::string csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << quantity << "," << oracle_value << "," << candidate_value << "," << abs_err << "," << rel_err << ","
       << tolerance << "," << (relative ? "true" : "false") << "," << (pass ? "true" : "false");
    return os.str();
  }

  nlohmann::json to_json() const {
    return {{"quantity", quantity}, {"oracle", oracle_value}, {"candidate", candidate_value},
            {"abs_err", abs_err},   {"rel_err", rel_err},     {"tolerance", tolerance},
            {"relative", relative}, {"pass", pass}};
  }
};

inline void write_reports_csv(std::ostream& out, const std::vector<OracleReport>& reps) {
  out << OracleReport::csv_header() << "\n";
  for (const auto& r : reps) out << r.csv_row() << "\n";
}

inline nlohmann::json reports_json(const std::vector<OracleReport>& reps) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reps) j.push_back(r.to_json());
  return j;
}

// ---------------------------------------------------------------------------
// Finite differences.

using VecMap = std::function<Vec(const Vec&)>;

/// Central differences, column by column. eps <= 0 selects 1e-6 (1 + |at|).
inline Mat fd_jacobian(const VecMap& f, const Vec& at, double eps = -1.0) {
  if (eps <= 0) eps = 1e-6 * (1.0 + at.norm());
  const Vec f0 = f(at);
  Mat j(f0.size(), at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    Vec a = at, b = at;
    a(k) += eps;
    b(k) -= eps;
    j.col(k) = (f(a) - f(b)) / (2.0 * eps);
  }
  return j;
}

/// Point-valued maps in flat coordinates.
inline Mat fd_jacobian(const std::function<Point(const Point&)>& f, const Point& at, double eps = -1.0) {
  return fd_jacobian([&](const Vec& v) { return to_flat(f(from_flat(at, v))); }, to_flat(at), eps);
}

/// Dense matrix of a linear map on points, in flat coordinates.
inline Mat dense_of(const std::function<Point(const Point&)>& lin, const Point& shape) {
  const Eigen::Index n = shape.dim();
  Mat out(n, n);
  for (Eigen::Index k = 0; k < n; ++k) out.col(k) = to_flat(lin(from_flat(shape, Vec::Unit(n, k))));
  return out;
}

// ---------------------------------------------------------------------------
// Polyhedra {x : A x >= b}.

struct PolyhedralProjection {
  Vec x;
  Vec lambda;  // multipliers, x - z = A^T lambda
  std::vector<int> active;
};

/// Enumerates every index subset: projects onto the affine hull of the face,
/// keeps feasible candidates with nonnegative multipliers, returns the closest.
inline PolyhedralProjection brute_project_polyhedron(const Mat& a, const Vec& b, const Vec& z) {
  const int m = static_cast<int>(a.rows());
  require(a.cols() == z.size() && a.rows() == b.size(), "brute_project_polyhedron: dimension mismatch");
  if (m > 16) throw TooManyConstraints("brute_project_polyhedron: m > 16");
  const double scale = 1.0 + z.norm() + b.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * scale;
  PolyhedralProjection best;
  double best_d = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    Vec x = z;
    Vec nu = Vec::Zero(static_cast<Eigen::Index>(idx.size()));
    if (!idx.empty()) {
      Mat ai(idx.size(), a.cols());
      Vec bi(idx.size());
      for (size_t r = 0; r < idx.size(); ++r) {
        ai.row(r) = a.row(idx[r]);
        bi(r) = b(idx[r]);
      }
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(ai * ai.transpose());
      nu = cod.solve(bi - ai * z);
      x = z + ai.transpose() * nu;
      if ((ai * x - bi).cwiseAbs().maxCoeff() > tol) continue;  // inconsistent face
      if (nu.minCoeff() < -tol) continue;
    }
    if ((a * x - b).minCoeff() < -tol) continue;
    const double d = (x - z).norm();
    if (d < best_d - 1e-14 * scale) {
      best_d = d;
      best.x = x;
      best.lambda = Vec::Zero(m);
      for (size_t r = 0; r < idx.size(); ++r) best.lambda(idx[r]) = nu(r);
      best.active = idx;
    }
  }
  if (!std::isfinite(best_d)) throw InfeasibleSet("brute_project_polyhedron: no feasible candidate");
  return best;
}

/// Second method: accelerated projected gradient on the dual
/// min_{lambda >= 0} 0.5 |A^T lambda|^2 - lambda^T (b - A z), x = z + A^T lambda.
inline Vec dual_gradient_project_polyhedron(const Mat& a, const Vec& b, const Vec& z, double tol = 1e-12,
                                            int max_iter = 500000) {
  const Mat g = a * a.transpose();
  const Vec c = b - a * z;
  const double lip = Eigen::SelfAdjointEigenSolver<Mat>(g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  require(lip > 0, "dual_gradient_project_polyhedron: A must be nonzero");
  Vec lam = Vec::Zero(a.rows()), yk = lam;
  double tk = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec next = (yk - (g * yk - c) / lip).cwiseMax(0.0);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    Vec ynext = next + ((tk - 1.0) / tn) * (next - lam);
    // Gradient-based restart keeps the iteration monotone near the solution.
    if ((next - lam).dot(yk - next) > 0) {
      ynext = next;
      tk = 1.0;
    } else {
      tk = tn;
    }
    const double change = (next - lam).norm();
    lam = next;
    yk = ynext;
    if (change <= tol * (1.0 + lam.norm()) && it > 10) {
      // Confirm with the projected-gradient stationarity measure.
      const Vec pg = (lam - (g * lam - c)).cwiseMax(0.0) - lam;
      if (pg.norm() <= tol * (1.0 + c.norm())) break;
    }
  }
  return z + a.transpose() * lam;
}

namespace detail {

/// DPi = I - A_I^T (A_I A_I^T)^+ A_I at a point whose active rows carry
/// strictly positive multipliers. Throws NotDifferentiable otherwise.
inline Mat nullspace_projector(const Mat& a, const Vec& b, const Vec& x, const Vec& z, double tol) {
  const Vec s = a * x - b;
  std::vector<int> act;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    if (s(i) <= tol) act.push_back(static_cast<int>(i));
  const Eigen::Index n = a.cols();
  if (act.empty()) return Mat::Identity(n, n);
  Mat ai(act.size(), n);
  for (size_t r = 0; r < act.size(); ++r) ai.row(r) = a.row(act[r]);
  Eigen::FullPivLU<Mat> lu(ai);
  lu.setThreshold(1e-10);
  if (lu.rank() < static_cast<Eigen::Index>(act.size())) {
    if (lu.rank() == n) return Mat::Zero(n, n);  // z - x interior to a full-dimensional normal cone
    throw NotDifferentiable("polyhedral oracle: dependent active rows");
  }
  const Vec lam = (ai * ai.transpose()).ldlt().solve(ai * (x - z));
  if (lam.minCoeff() <= tol) throw NotDifferentiable("polyhedral oracle: zero multiplier on an active row");
  return Mat::Identity(n, n) - ai.transpose() * (ai * ai.transpose()).ldlt().solve(ai);
}

}  // namespace detail

inline Mat exact_derivative_polyhedron(const Mat& a, const Vec& b, const Vec& z, double tol = -1.0) {
  if (tol <= 0) tol = 1e-8 * (1.0 + z.norm());
  const PolyhedralProjection p = brute_project_polyhedron(a, b, z);
  return detail::nullspace_projector(a, b, p.x, z, tol);
}

// ---------------------------------------------------------------------------
// C_n = {(t, x) : t >= |x|_inf}.

struct LinfOracle {
  double t = 0;
  Vec x;
  int k_star = 0;
};

/// Tries every k and returns the unique one passing the bracket test.
inline LinfOracle brute_project_linf(double z_o, const Vec& z) {
  const int n = static_cast<int>(z.size());
  std::vector<int> pi(n);
  std::iota(pi.begin(), pi.end(), 0);
  std::stable_sort(pi.begin(), pi.end(), [&](int i, int j) { return std::abs(z(i)) > std::abs(z(j)); });
  auto mag = [&](int k) {  // |z_pi(k)| with the sentinels at k = 0 and k = n + 1
    if (k == 0) return std::numeric_limits<double>::infinity();
    if (k == n + 1) return 0.0;
    return std::abs(z(pi[k - 1]));
  };
  std::vector<int> passing;
  std::vector<double> ts;
  for (int k = 0; k <= n; ++k) {
    double sum = z_o;
    for (int i = 1; i <= k; ++i) sum += mag(i);
    const double t = std::max(sum / (k + 1), 0.0);
    if (mag(k) > t && t >= mag(k + 1)) {
      passing.push_back(k);
      ts.push_back(t);
    }
  }
  if (passing.empty()) throw NoBracket("brute_project_linf: no k satisfies the bracket");
  LinfOracle out;
  out.k_star = passing.front();
  out.t = ts.front();
  out.x = z;
  for (int i = 0; i < out.k_star; ++i) {
    out.x(pi[i]) = std::copysign(out.t, z(pi[i]));
  }
  return out;
}

inline Mat linf_constraint_rows(int n) {
  Mat a = Mat::Zero(2 * n, n + 1);
  for (int i = 0; i < n; ++i) {
    a(2 * i, 0) = 1.0;
    a(2 * i, i + 1) = -1.0;
    a(2 * i + 1, 0) = 1.0;
    a(2 * i + 1, i + 1) = 1.0;
  }
  return a;
}

/// Flat coordinates (t, x).
inline Mat exact_derivative_linf(double z_o, const Vec& z, double tol = -1.0) {
  if (tol <= 0) tol = 1e-8 * (1.0 + std::hypot(z_o, z.norm()));
  const int n = static_cast<int>(z.size());
  const LinfOracle p = brute_project_linf(z_o, z);
  Vec xp(n + 1), zp(n + 1);
  xp << p.t, p.x;
  zp << z_o, z;
  const Mat a = linf_constraint_rows(n);
  if (p.t <= tol) {
    // Apex: differentiable only when z lies inside the polar cone.
    if (z_o + z.lpNorm<1>() < -tol) return Mat::Zero(n + 1, n + 1);
    if (zp.norm() <= tol || z_o < z.lpNorm<Eigen::Infinity>() + tol)
      throw NotDifferentiable("linf oracle: apex with z on the polar boundary");
  }
  return detail::nullspace_projector(a, Vec::Zero(2 * n), xp, zp, tol);
}

// ---------------------------------------------------------------------------
// Orthant, PSD cone, second-order cone.

inline Vec project_orthant(const Vec& z) { return z.cwiseMax(0.0); }

inline Mat exact_derivative_orthant(const Vec& z, double tol = -1.0) {
  if (tol <= 0) tol = 1e-8 * (1.0 + z.norm());
  Vec d(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (std::abs(z(i)) <= tol) throw NotDifferentiable("orthant oracle: zero coordinate");
    d(i) = z(i) > 0 ? 1.0 : 0.0;
  }
  return d.asDiagonal();
}

inline Point project_psd(const Point& z) {
  const SymEigen e = sym_eigen(z.x);
  return Point::sym(e.q * e.lambda.cwiseMax(0.0).asDiagonal() * e.q.transpose());
}

/// Loewner derivative of max(., 0) with first divided differences, in svec coordinates.
inline Mat exact_derivative_psd(const Point& z, double tol = -1.0) {
  if (tol <= 0) tol = 1e-8 * (1.0 + norm(z));
  const SymEigen e = sym_eigen(z.x);
  const Eigen::Index n = e.lambda.size();
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(e.lambda(i)) <= tol) throw NotDifferentiable("psd oracle: zero eigenvalue");
  Mat gamma(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double li = e.lambda(i), lj = e.lambda(j);
      const double fi = std::max(li, 0.0), fj = std::max(lj, 0.0);
      gamma(i, j) = (li > 0) == (lj > 0) ? (li > 0 ? 1.0 : 0.0) : (fi - fj) / (li - lj);
    }
  return dense_of(
      [&](const Point& h) {
        const Mat ht = e.q.transpose() * h.x * e.q;
        return Point::sym(e.q * gamma.cwiseProduct(ht) * e.q.transpose());
      },
      z);
}

/// Second-order cone {(t, x) : t >= |x|} in flat coordinates.
inline Vec project_soc(const Vec& z) {
  const double t = z(0);
  const Vec x = z.tail(z.size() - 1);
  const double r = x.norm();
  if (t >= r) return z;
  if (t <= -r) return Vec::Zero(z.size());
  Vec out(z.size());
  const double c = 0.5 * (t + r);
  out << c, c * x / r;
  return out;
}

inline Mat exact_derivative_soc(const Vec& z, double tol = -1.0) {
  if (tol <= 0) tol = 1e-8 * (1.0 + z.norm());
  const Eigen::Index d = z.size();
  const double t = z(0);
  const Vec x = z.tail(d - 1);
  const double r = x.norm();
  if (t > r + tol) return Mat::Identity(d, d);
  if (t < -r - tol) return Mat::Zero(d, d);
  if (std::abs(std::abs(t) - r) <= tol) throw NotDifferentiable("soc oracle: boundary of the cone or its polar");
  const Vec xb = x / r;
  Mat j(d, d);
  j(0, 0) = 1.0;
  j.block(0, 1, 1, d - 1) = xb.transpose();
  j.block(1, 0, d - 1, 1) = xb;
  j.block(1, 1, d - 1, d - 1) = (1.0 + t / r) * Mat::Identity(d - 1, d - 1) - (t / r) * xb * xb.transpose();
  return 0.5 * j;
}

// ---------------------------------------------------------------------------
// Operator-norm and nuclear-norm epigraphs.

/// Projection onto {(t, X) : |X|_2 <= t} through the C_m oracle on (t, sigma).
inline Point project_opnorm(const Point& z) {
  const ThinSvd s = thin_svd(z.x);
  const LinfOracle c = brute_project_linf(z.t, s.sigma);
  return Point::scalar_matrix(c.t, svd_compose(s.u, c.x, s.v));
}

/// Projection onto {(t, X) : |X|_* <= t} by the Moreau decomposition.
inline Point project_nuclear(const Point& z) { return z + project_opnorm(-z); }

/// Directional derivative of the operator-norm epigraph projector at z along w.
inline Point exact_proj_derivative_opnorm(const Point& z, const Point& w, double tol = -1.0) {
  require(z.kind == PointKind::ScalarMatrix && z.same_shape(w), "exact_proj_derivative_opnorm: shape");
  if (tol <= 0) tol = 1e-8 * (1.0 + norm(z));
  const ThinSvd s = thin_svd(z.x);
  const Eigen::Index m = s.sigma.size();
  const double smax = s.sigma(0);
  const double snuc = s.sigma.sum();
  const double t = z.t;
  if (t > smax + tol) return w;
  if (t < -snuc - tol) return w.zeros_like();
  if (std::abs(t - smax) <= tol || std::abs(t + snuc) <= tol)
    throw NotDifferentiable("opnorm oracle: boundary between the three cases");
  const LinfOracle c = brute_project_linf(t, s.sigma);
  const double q0 = c.t;
  const Vec& q = c.x;
  std::vector<char> alpha(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(s.sigma(i) - q0) <= tol) throw NotDifferentiable("opnorm oracle: singular value equals q0");
    alpha[i] = s.sigma(i) > q0;
  }
  const Mat v1 = s.v.leftCols(m);
  const Mat v2 = s.v.rightCols(s.v.cols() - m);
  const Mat a = s.u.transpose() * w.x * v1;
  const Mat b = s.u.transpose() * w.x * v2;
  const Mat sa = 0.5 * (a + a.transpose());
  const Mat ta = 0.5 * (a - a.transpose());
  int kbar = 0;
  double tr = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (alpha[i]) {
      ++kbar;
      tr += sa(i, i);
    }
  const double dq0 = (w.t + tr) / (1.0 + kbar);
  Mat core(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double si = s.sigma(i), sj = s.sigma(j);
      double sym;
      if (alpha[i] && alpha[j]) sym = i == j ? dq0 : 0.0;
      else if (!alpha[i] && !alpha[j]) sym = sa(i, j);
      else sym = (q(i) - q(j)) / (si - sj) * sa(i, j);
      const double om2 = si + sj > tol ? (q(i) + q(j)) / (si + sj) : 1.0;
      core(i, j) = sym + om2 * ta(i, j);
    }
  Mat rect = b;
  for (Eigen::Index i = 0; i < m; ++i)
    if (s.sigma(i) > tol) rect.row(i) *= q(i) / s.sigma(i);
  Mat wx = s.u * core * v1.transpose();
  if (v2.cols() > 0) wx += s.u * rect * v2.transpose();
  return Point::scalar_matrix(dq0, wx);
}

inline Mat exact_derivative_opnorm(const Point& z, double tol = -1.0) {
  return dense_of([&](const Point& w) { return exact_proj_derivative_opnorm(z, w, tol); }, z);
}

/// D Pi_nuclear(z) = I - D Pi_opnorm(-z).
inline Mat exact_derivative_nuclear(const Point& z, double tol = -1.0) {
  const Eigen::Index d = z.dim();
  return Mat::Identity(d, d) - exact_derivative_opnorm(-z, tol);
}

// ---------------------------------------------------------------------------
// Counterexample with a barrier that does not fit the cone.

struct AppendixB {
  Mat correct;      // Jacobian of the correct-barrier smoothing at (0, 1, 0) + offset
  Mat wrong;        // Jacobian of the mismatched-barrier smoothing at (0, 1, 0)
  Mat fd_projection;
  std::vector<OracleReport> checks;
};

namespace detail {

/// Solves p + mu^2 grad f(p) = z, the stationarity condition of
/// 0.5 |p|^2 + mu^2 f(p) - <z, p>, by damped Newton, and returns
/// (I + mu^2 hess f(p))^{-1}.
struct BarrierFns {
  std::function<double(const Vec&)> value;  // +inf outside the domain
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

inline Mat barrier_smoothing_jacobian(const BarrierFns& f, const Vec& z, double mu, Vec p) {
  const double mu2 = mu * mu;
  const Eigen::Index d = z.size();
  auto obj = [&](const Vec& v) { return 0.5 * v.squaredNorm() + mu2 * f.value(v) - z.dot(v); };
  for (int it = 0; it < 500; ++it) {
    const Vec r = p + mu2 * f.grad(p) - z;
    const Mat jac = Mat::Identity(d, d) + mu2 * f.hess(p);
    const Vec dp = -jac.ldlt().solve(r);
    const double dec = -r.dot(dp);
    if (dec <= 1e-30 * (1.0 + z.squaredNorm())) break;
    const double f0 = obj(p);
    double step = 1.0;
    // Within the quadratic region the objective is too flat to compare.
    while (dec > 1e-16 && step > 1e-20 && !(obj(p + step * dp) <= f0 - 0.25 * step * dec)) step *= 0.5;
    while (!std::isfinite(f.value(p + step * dp)) && step > 1e-20) step *= 0.5;
    p += step * dp;
  }
  return (Mat::Identity(d, d) + mu2 * f.hess(p)).inverse();
}

}  // namespace detail

/// Correct barrier -log(t^2 - |x|^2) versus the mismatched barrier
/// -log(t^2 - |x|^2) - log(t - x1) - log(t + x1) on the cone of R^3.
inline AppendixB appendix_b_regression(double mu = 1e-5, double offset = 1e-5) {
  AppendixB out;
  Vec zstar(3);
  zstar << 0.0, 1.0, 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  auto soc_gap = [](const Vec& p) { return p(0) * p(0) - p.tail(2).squaredNorm(); };
  detail::BarrierFns soc;
  soc.value = [=](const Vec& p) { return p(0) > 0 && soc_gap(p) > 0 ? -std::log(soc_gap(p)) : inf; };
  soc.grad = [=](const Vec& p) {
    const double m = soc_gap(p);
    Vec g(3);
    g << -2.0 * p(0) / m, 2.0 * p(1) / m, 2.0 * p(2) / m;
    return g;
  };
  soc.hess = [=](const Vec& p) {
    const double m = soc_gap(p);
    Vec jp(3);
    jp << p(0), -p(1), -p(2);
    Mat j = Mat::Identity(3, 3);
    j(1, 1) = j(2, 2) = -1.0;
    return Mat(-2.0 / m * j + 4.0 / (m * m) * jp * jp.transpose());
  };
  detail::BarrierFns wrong;
  wrong.value = [=](const Vec& p) {
    const double a = p(0) - p(1), b = p(0) + p(1);
    const double v = soc.value(p);
    return std::isfinite(v) && a > 0 && b > 0 ? v - std::log(a) - std::log(b) : inf;
  };
  wrong.grad = [=](const Vec& p) {
    Vec g = soc.grad(p);
    const double a = p(0) - p(1), b = p(0) + p(1);
    g(0) += -1.0 / a - 1.0 / b;
    g(1) += 1.0 / a - 1.0 / b;
    return g;
  };
  wrong.hess = [=](const Vec& p) {
    Mat h = soc.hess(p);
    const double a = p(0) - p(1), b = p(0) + p(1);
    Vec ea(3), eb(3);
    ea << 1.0, -1.0, 0.0;
    eb << 1.0, 1.0, 0.0;
    h += ea * ea.transpose() / (a * a) + eb * eb.transpose() / (b * b);
    return h;
  };
  Vec start(3);
  start << 2.0, 0.5, 0.0;
  Vec zc = zstar;
  zc(0) += offset;
  zc(1) += offset;
  out.correct = detail::barrier_smoothing_jacobian(soc, zc, mu, start);
  const Mat correct_at_star = detail::barrier_smoothing_jacobian(soc, zstar, mu, start);
  out.wrong = detail::barrier_smoothing_jacobian(wrong, zstar, mu, start);
  out.fd_projection = fd_jacobian(project_soc, zstar);
  Mat expect_correct(3, 3), expect_wrong(3, 3);
  expect_correct << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 0.5;
  expect_wrong << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 2.0 / 3.0;
  out.checks.push_back(OracleReport::matrix("fd Jacobian of the SOC projection at (0,1,0)", expect_correct,
                                            out.fd_projection, 1e-6, false));
  out.checks.push_back(
      OracleReport::matrix("correct barrier Jacobian limit", expect_correct, out.correct, 1e-3, false));
  out.checks.push_back(OracleReport::scalar("mismatched barrier (3,3) entry", 2.0 / 3.0, out.wrong(2, 2), 1e-6));
  out.checks.push_back(
      OracleReport::scalar("(3,3) gap between the two limits", 1.0 / 6.0, out.wrong(2, 2) - correct_at_star(2, 2), 1e-6));
  return out;
}

}  // namespace ncvi::oracle
