#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ncvi/space.hpp"

namespace ncvi {

enum class SetKind { Orthant, PsdCone, Polyhedron, LinfEpigraph, OpNormEpigraph, NuclearEpigraph, SecondOrderCone3 };

inline std::string to_string(SetKind k) {
  switch (k) {
    case SetKind::Orthant: return "orthant";
    case SetKind::PsdCone: return "psd";
    case SetKind::Polyhedron: return "polyhedron";
    case SetKind::LinfEpigraph: return "linf";
    case SetKind::OpNormEpigraph: return "opnorm";
    case SetKind::NuclearEpigraph: return "nuclear";
    case SetKind::SecondOrderCone3: return "soc3";
  }
  return "?";
}

struct FaceDiagnostics {
  bool differentiable = false;
  std::optional<bool> strictly_complementary;
  std::vector<int> active_set;
  int rank_info = -1;          // k* for epigraphs, number of positive eigenvalues for PSD
  bool indeterminate = false;  // some margin fell inside [0, tol]
  double tol = 0.0;
};

/// Weighted log barrier -sum_i w_i log(a_i^T y - b_i) in flat coordinates.
struct LogBarrierRows {
  Mat a;
  Vec b;
  Vec w;

  Vec slacks(const Vec& y) const { return a * y - b; }
  double value(const Vec& s) const { return -(w.array() * s.array().log()).sum(); }
  Vec gradient(const Vec& s) const { return -a.transpose() * (w.array() / s.array()).matrix(); }
  Vec hessian_apply(const Vec& s, const Vec& u) const {
    return a.transpose() * ((w.array() / s.array().square()) * (a * u).array()).matrix();
  }
};

/// A closed convex set together with a self-concordant barrier and the exact
/// Euclidean projection. Implementations must be immutable after construction.
class ConvexSet {
 public:
  virtual ~ConvexSet() = default;

  virtual SetKind kind() const = 0;
  virtual double theta() const = 0;
  /// Zero point with the ambient shape.
  virtual Point shape() const = 0;
  /// Canonical strictly interior point.
  virtual Point interior_point() const = 0;
  virtual bool is_interior(const Point& p) const = 0;

  virtual double barrier_value(const Point& p) const = 0;
  virtual Point barrier_gradient(const Point& p) const = 0;
  virtual Point barrier_hessian_apply(const Point& p, const Point& u) const = 0;

  virtual Point exact_project(const Point& z) const = 0;
  virtual FaceDiagnostics diagnose(const Point& z, double tol) const = 0;

  std::string name() const { return to_string(kind()); }
  Eigen::Index dim() const { return shape().dim(); }

 protected:
  void check_shape(const Point& p) const {
    if (!p.same_shape(shape())) throw ContractViolation(name() + ": point shape mismatch");
  }
  void check_interior(const Point& p) const {
    check_shape(p);
    if (!is_interior(p)) throw BoundaryOrExterior(name() + ": point is not strictly interior");
  }
};

using SmoothedSet = std::shared_ptr<const ConvexSet>;

inline double default_diag_tol(const Point& z) { return 1e-8 * (1.0 + norm(z)); }

// ---------------------------------------------------------------------------
// C_n projection by sorting.

struct LinfProjection {
  double t = 0;
  Vec x;
  int k_star = 0;
};

/// Projection of (z_o, z) onto {(t, x): t >= max_i |x_i|}.
inline LinfProjection linf_project(double z_o, const Vec& z) {
  const int n = static_cast<int>(z.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) { return std::abs(z(i)) > std::abs(z(j)); });
  auto a = [&](int k) {  // |z_pi(k)| with 1-based k and sentinels
    if (k <= 0) return std::numeric_limits<double>::infinity();
    if (k > n) return 0.0;
    return std::abs(z(perm[k - 1]));
  };
  double sum = z_o;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) sum += a(k);
    const double t = std::max(sum / (k + 1), 0.0);
    // The first k with t_k >= a_{k+1} also has a_k > t_k; testing only this
    // side keeps ties on the boundary from slipping through in rounding.
    if (t >= a(k + 1)) {
      LinfProjection out;
      out.t = t;
      out.k_star = k;
      out.x = z;
      for (int i = 0; i < k; ++i) {
        const int j = perm[i];
        out.x(j) = (z(j) >= 0 ? 1.0 : -1.0) * t;
      }
      return out;
    }
  }
  throw NoBracket("linf_project: no bracketing index found");
}

// ---------------------------------------------------------------------------

class Orthant final : public ConvexSet {
 public:
  explicit Orthant(int n) : n_(n) { require(n >= 1, "Orthant: n >= 1"); }

  SetKind kind() const override { return SetKind::Orthant; }
  double theta() const override { return n_; }
  Point shape() const override { return Point::vector(Vec::Zero(n_)); }
  Point interior_point() const override { return Point::vector(Vec::Ones(n_)); }
  bool is_interior(const Point& p) const override { return (p.x.array() > 0).all(); }

  double barrier_value(const Point& p) const override {
    check_interior(p);
    return -p.x.array().log().sum();
  }
  Point barrier_gradient(const Point& p) const override {
    check_interior(p);
    return Point::vector(-p.x.array().inverse().matrix());
  }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    check_interior(p);
    return Point::vector((u.x.array() / p.x.array().square()).matrix());
  }
  Point exact_project(const Point& z) const override {
    check_shape(z);
    return Point::vector(z.x.cwiseMax(0.0));
  }
  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    FaceDiagnostics d;
    d.tol = tol;
    const Vec v = z.vec();
    d.differentiable = (v.array().abs() > tol).all();
    d.indeterminate = !d.differentiable && (v.array().abs() > 0).all();
    const Vec x = v.cwiseMax(0.0), y = x - v;
    d.strictly_complementary = ((x + y).array() > tol).all();
    for (int i = 0; i < n_; ++i)
      if (v(i) > tol) d.active_set.push_back(i);
    d.rank_info = static_cast<int>(d.active_set.size());
    return d;
  }

 private:
  int n_;
};

class PsdCone final : public ConvexSet {
 public:
  explicit PsdCone(int n) : n_(n) { require(n >= 1, "PsdCone: n >= 1"); }

  SetKind kind() const override { return SetKind::PsdCone; }
  double theta() const override { return n_; }
  Point shape() const override { return Point::sym(Mat::Zero(n_, n_)); }
  Point interior_point() const override { return Point::sym(Mat::Identity(n_, n_)); }
  bool is_interior(const Point& p) const override {
    Eigen::LLT<Mat> llt(p.x);
    return llt.info() == Eigen::Success;
  }

  double barrier_value(const Point& p) const override {
    check_shape(p);
    Eigen::LLT<Mat> llt(p.x);
    if (llt.info() != Eigen::Success) throw BoundaryOrExterior("psd: point is not positive definite");
    return -2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  }
  Point barrier_gradient(const Point& p) const override {
    return Point::sym(-inverse(p));
  }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    const Mat xi = inverse(p);
    return Point::sym(xi * u.x * xi);
  }
  Point exact_project(const Point& z) const override {
    check_shape(z);
    const SymEigen e = sym_eigen(z.x);
    return Point::sym(e.q * e.lambda.cwiseMax(0.0).asDiagonal() * e.q.transpose());
  }
  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    FaceDiagnostics d;
    d.tol = tol;
    const SymEigen e = sym_eigen(z.x);
    d.differentiable = (e.lambda.array().abs() > tol).all();
    d.indeterminate = !d.differentiable && (e.lambda.array().abs() > 0).all();
    d.rank_info = static_cast<int>((e.lambda.array() > tol).count());
    const Mat x = exact_project(z).x;
    const Mat y = x - z.x;
    d.strictly_complementary = sym_eigen(x + y).lambda.minCoeff() > tol;
    return d;
  }

 private:
  Mat inverse(const Point& p) const {
    check_shape(p);
    Eigen::LLT<Mat> llt(p.x);
    if (llt.info() != Eigen::Success) throw BoundaryOrExterior("psd: point is not positive definite");
    return llt.solve(Mat::Identity(n_, n_));
  }
  int n_;
};

// ---------------------------------------------------------------------------
// Polyhedron {x : A x >= b}

namespace detail {

/// Chebyshev-style interior probe: maximize r subject to A_i x - r |A_i| >= b_i
/// and r <= 1, by a log-barrier path with a unit proximal term on x that keeps
/// the point bounded on unbounded polyhedra.
/// Returns (x, r); r > 0 certifies a strictly feasible x.
inline std::pair<Vec, double> chebyshev_probe(const Mat& a, const Vec& b) {
  const Eigen::Index m = a.rows(), n = a.cols();
  Vec rn = a.rowwise().norm();
  for (Eigen::Index i = 0; i < m; ++i)
    if (rn(i) == 0) rn(i) = 1.0;
  Mat g(m + 1, n + 1);
  g.setZero();
  g.topLeftCorner(m, n) = a;
  g.block(0, n, m, 1) = -rn;
  g(m, n) = -1.0;
  Vec h(m + 1);
  h.head(m) = b;
  h(m) = -1.0;
  Vec y = Vec::Zero(n + 1);
  double r0 = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) r0 = std::min(r0, -b(i) / rn(i));
  y(n) = r0 - 1.0;
  const double delta = 1.0;
  Vec c = Vec::Zero(n + 1);
  c(n) = -1.0;

  auto phi = [&](const Vec& v, double tau, bool& ok) {
    Vec s = g * v - h;
    ok = (s.array() > 0).all();
    if (!ok) return std::numeric_limits<double>::infinity();
    return tau * c.dot(v) + 0.5 * delta * v.head(n).squaredNorm() - s.array().log().sum();
  };

  for (double tau = 1.0; tau <= 1e12; tau *= 8.0) {
    for (int it = 0; it < 200; ++it) {
      Vec s = g * y - h;
      Vec grad = tau * c - g.transpose() * s.cwiseInverse();
      grad.head(n) += delta * y.head(n);
      Mat hess = g.transpose() * s.array().square().inverse().matrix().asDiagonal() * g;
      hess.diagonal().head(n).array() += delta;
      Vec dy = -hess.ldlt().solve(grad);
      const double dec = -grad.dot(dy);
      if (!(dec == dec)) break;
      if (dec < 1e-14) break;
      double step = 1.0;
      bool ok = false;
      const double f0 = phi(y, tau, ok);
      while (step > 1e-16) {
        const double f1 = phi(y + step * dy, tau, ok);
        if (ok && f1 <= f0 - 0.25 * step * dec) break;
        step *= 0.5;
      }
      if (step <= 1e-16) break;
      y += step * dy;
    }
  }
  return {y.head(n), y(n)};
}

}  // namespace detail

class Polyhedron final : public ConvexSet {
 public:
  Polyhedron(Mat a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
    require(a_.rows() == b_.size(), "Polyhedron: A rows must match b length");
    require(a_.rows() >= 1 && a_.cols() >= 1, "Polyhedron: empty data");
    auto [x, r] = detail::chebyshev_probe(a_, b_);
    const Vec s = a_ * x - b_;
    if (!(r > 1e-9) || !(s.array() > 0).all()) throw InfeasibleSet("polyhedron has no strictly feasible point");
    center_ = x;
    radius_ = r;
    rows_.a = a_;
    rows_.b = b_;
    rows_.w = Vec::Ones(a_.rows());
  }

  SetKind kind() const override { return SetKind::Polyhedron; }
  double theta() const override { return static_cast<double>(a_.rows()); }
  Point shape() const override { return Point::vector(Vec::Zero(a_.cols())); }
  Point interior_point() const override { return Point::vector(center_); }
  bool is_interior(const Point& p) const override { return (rows_.slacks(p.vec()).array() > 0).all(); }

  const Mat& a() const { return a_; }
  const Vec& b() const { return b_; }
  const LogBarrierRows& rows() const { return rows_; }
  double probe_radius() const { return radius_; }

  double barrier_value(const Point& p) const override {
    check_interior(p);
    return rows_.value(rows_.slacks(p.vec()));
  }
  Point barrier_gradient(const Point& p) const override {
    check_interior(p);
    return Point::vector(rows_.gradient(rows_.slacks(p.vec())));
  }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    check_interior(p);
    return Point::vector(rows_.hessian_apply(rows_.slacks(p.vec()), u.vec()));
  }

  /// Active-set enumeration for m <= 16, dual coordinate ascent otherwise.
  Point exact_project(const Point& z) const override {
    check_shape(z);
    const Vec v = z.vec();
    if (a_.rows() <= 16) {
      auto r = enumerate(v);
      if (r) return Point::vector(*r);
    }
    return Point::vector(hildreth(v));
  }

  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    FaceDiagnostics d;
    d.tol = tol;
    const Vec v = z.vec();
    const Vec x = exact_project(z).vec();
    const Vec s = a_ * x - b_;
    const Eigen::Index m = a_.rows();
    bool margins_ok = true;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s(i) <= tol) d.active_set.push_back(static_cast<int>(i));
      else if (s(i) <= 2 * tol) d.indeterminate = true;
    }
    const Eigen::Index k = static_cast<Eigen::Index>(d.active_set.size());
    d.rank_info = static_cast<int>(k);
    if (k == 0) {
      d.differentiable = margins_ok;
      return d;
    }
    Mat ai(k, a_.cols());
    for (Eigen::Index j = 0; j < k; ++j) ai.row(j) = a_.row(d.active_set[j]);
    // x - z = A_I^T lambda with lambda > 0 strictly.
    const Vec rhs = x - v;
    Eigen::ColPivHouseholderQR<Mat> qr(ai.transpose());
    qr.setThreshold(1e-12);
    Vec lam;
    if (qr.rank() == k) {
      lam = qr.solve(rhs);
    } else {
      lam = positive_multipliers(ai, rhs, tol);
    }
    const double fit = (ai.transpose() * lam - rhs).norm();
    d.differentiable = fit <= 1e-8 * (1.0 + rhs.norm()) && (lam.array() > tol).all();
    if (!d.differentiable && (lam.array() > 0).all() && fit <= 1e-8 * (1.0 + rhs.norm())) d.indeterminate = true;
    return d;
  }

 private:
  std::optional<Vec> enumerate(const Vec& z) const {
    const int m = static_cast<int>(a_.rows());
    const int n = static_cast<int>(a_.cols());
    const double scale = 1.0 + z.norm() + b_.cwiseAbs().maxCoeff();
    const double ftol = 1e-11 * scale;
    if (((a_ * z - b_).array() >= -ftol).all()) return z;
    std::vector<int> idx;
    for (int size = 1; size <= std::min(m, n); ++size) {
      idx.resize(size);
      std::iota(idx.begin(), idx.end(), 0);
      while (true) {
        Mat ai(size, n);
        Vec bi(size);
        for (int j = 0; j < size; ++j) {
          ai.row(j) = a_.row(idx[j]);
          bi(j) = b_(idx[j]);
        }
        Eigen::FullPivLU<Mat> lu(ai * ai.transpose());
        lu.setThreshold(1e-12);
        if (lu.isInvertible()) {
          const Vec lam = lu.solve(bi - ai * z);
          if ((lam.array() >= -ftol).all()) {
            const Vec x = z + ai.transpose() * lam;
            if (((a_ * x - b_).array() >= -ftol).all()) return x;
          }
        }
        int p = size - 1;
        while (p >= 0 && idx[p] == m - size + p) --p;
        if (p < 0) break;
        ++idx[p];
        for (int q = p + 1; q < size; ++q) idx[q] = idx[q - 1] + 1;
      }
    }
    return std::nullopt;
  }

  Vec hildreth(const Vec& z) const {
    const Eigen::Index m = a_.rows();
    Vec lam = Vec::Zero(m);
    Vec x = z;
    const Vec rn2 = a_.rowwise().squaredNorm();
    const double scale = 1.0 + z.norm() + b_.cwiseAbs().maxCoeff();
    for (int sweep = 0; sweep < 200000; ++sweep) {
      double change = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (rn2(i) == 0) continue;
        const double li = std::max(0.0, lam(i) + (b_(i) - a_.row(i).dot(x)) / rn2(i));
        const double dl = li - lam(i);
        if (dl != 0.0) {
          x += dl * a_.row(i).transpose();
          lam(i) = li;
          change = std::max(change, std::abs(dl) * std::sqrt(rn2(i)));
        }
      }
      if (change <= 1e-13 * scale) {
        const Vec s = a_ * x - b_;
        const double viol = (-s).cwiseMax(0.0).maxCoeff();
        const double comp = (lam.array() * s.array()).abs().maxCoeff();
        if (viol <= 1e-10 * scale && comp <= 1e-10 * scale) return x;
      }
    }
    throw OracleFallbackNotConverged("polyhedral projection fallback did not reach 1e-10");
  }

  static Vec positive_multipliers(const Mat& ai, const Vec& rhs, double floor) {
    // Projected gradient on min |A_I^T lambda - rhs|^2 subject to lambda >= floor.
    const Eigen::Index k = ai.rows();
    Vec lam = Vec::Constant(k, floor);
    const double l = (ai * ai.transpose()).operatorNorm();
    const double step = l > 0 ? 1.0 / l : 1.0;
    for (int it = 0; it < 20000; ++it) {
      const Vec g = ai * (ai.transpose() * lam - rhs);
      lam = (lam - step * g).cwiseMax(floor * 1.0000001);
    }
    return lam;
  }

  Mat a_;
  Vec b_;
  Vec center_;
  double radius_ = 0;
  LogBarrierRows rows_;
};

// ---------------------------------------------------------------------------
// Epigraphs stored as ScalarMatrix points (t, x) with x of shape 1 x n for the
// vector cases.

inline LogBarrierRows linf_rows(int n) {
  LogBarrierRows r;
  r.a = Mat::Zero(2 * n, n + 1);
  r.b = Vec::Zero(2 * n);
  r.w = Vec::Ones(2 * n);
  for (int i = 0; i < n; ++i) {
    r.a(i, 0) = 1.0;
    r.a(i, 1 + i) = -1.0;
    r.a(n + i, 0) = 1.0;
    r.a(n + i, 1 + i) = 1.0;
  }
  return r;
}

/// Differentiability of the C_m-type projection of (z_o, a) with a >= 0 sorted
/// or unsorted, following the three-case criterion.
inline FaceDiagnostics epigraph_cases(double z_o, const Vec& a, double tol) {
  FaceDiagnostics d;
  d.tol = tol;
  const double amax = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  const double asum = a.cwiseAbs().sum();
  const LinfProjection p = linf_project(z_o, a);
  d.rank_info = p.k_star;
  if (z_o > amax + tol) {
    d.differentiable = true;
  } else if (z_o < -asum - tol) {
    d.differentiable = true;
  } else {
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.size(); ++i) gap = std::min(gap, std::abs(p.t - std::abs(a(i))));
    d.differentiable = p.t > tol && gap > tol && z_o < amax - tol && z_o > -asum + tol;
    d.indeterminate = !d.differentiable && p.t > 0 && gap > 0;
  }
  for (int i = 0; i < p.k_star; ++i) d.active_set.push_back(i);
  return d;
}

class LinfEpigraph final : public ConvexSet {
 public:
  explicit LinfEpigraph(int n) : n_(n), rows_(linf_rows(n)) { require(n >= 1, "LinfEpigraph: n >= 1"); }

  SetKind kind() const override { return SetKind::LinfEpigraph; }
  double theta() const override { return 2.0 * n_; }
  Point shape() const override { return Point::scalar_matrix(0.0, Mat::Zero(1, n_)); }
  Point interior_point() const override { return Point::scalar_matrix(1.0, Mat::Zero(1, n_)); }
  bool is_interior(const Point& p) const override { return p.t > p.x.cwiseAbs().maxCoeff(); }
  const LogBarrierRows& rows() const { return rows_; }

  double barrier_value(const Point& p) const override {
    check_interior(p);
    return rows_.value(rows_.slacks(to_flat(p)));
  }
  Point barrier_gradient(const Point& p) const override {
    check_interior(p);
    return from_flat(p, rows_.gradient(rows_.slacks(to_flat(p))));
  }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    check_interior(p);
    return from_flat(p, rows_.hessian_apply(rows_.slacks(to_flat(p)), to_flat(u)));
  }
  Point exact_project(const Point& z) const override {
    check_shape(z);
    const LinfProjection r = linf_project(z.t, z.vec());
    return Point::scalar_matrix(r.t, r.x.transpose());
  }
  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    return epigraph_cases(z.t, z.vec(), tol);
  }

 private:
  int n_;
  LogBarrierRows rows_;
};

/// Barrier data of -logdet [[t I_n, x^T], [x, t I_m]] evaluated through
/// S = (t^2 I - x x^T)^{-1}.
class OpNormEpigraph final : public ConvexSet {
 public:
  OpNormEpigraph(int m, int n) : m_(m), n_(n) { require(m >= 1 && m <= n, "OpNormEpigraph: requires 1 <= m <= n"); }

  SetKind kind() const override { return SetKind::OpNormEpigraph; }
  double theta() const override { return m_ + n_; }
  Point shape() const override { return Point::scalar_matrix(0.0, Mat::Zero(m_, n_)); }
  Point interior_point() const override { return Point::scalar_matrix(1.0, Mat::Zero(m_, n_)); }
  bool is_interior(const Point& p) const override {
    if (!(p.t > 0)) return false;
    Eigen::LLT<Mat> llt(p.t * p.t * Mat::Identity(m_, m_) - p.x * p.x.transpose());
    return llt.info() == Eigen::Success;
  }
  int m() const { return m_; }
  int n() const { return n_; }

  double barrier_value(const Point& p) const override {
    check_shape(p);
    Eigen::LLT<Mat> llt = factor(p);
    return -2.0 * Mat(llt.matrixL()).diagonal().array().log().sum() - (n_ - m_) * std::log(p.t);
  }
  Point barrier_gradient(const Point& p) const override {
    check_shape(p);
    const Mat s = factor(p).solve(Mat::Identity(m_, m_));
    return Point::scalar_matrix(-2.0 * p.t * s.trace() - (n_ - m_) / p.t, 2.0 * s * p.x);
  }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    check_shape(p);
    const Mat s = factor(p).solve(Mat::Identity(m_, m_));
    const double t = p.t, ho = u.t;
    const Mat& x = p.x;
    const Mat& h = u.x;
    const Mat e = 2.0 * t * ho * Mat::Identity(m_, m_) - h * x.transpose() - x * h.transpose();
    const Mat ds = -s * e * s;
    const double dgt = -2.0 * ho * s.trace() - 2.0 * t * ds.trace() + (n_ - m_) * ho / (t * t);
    return Point::scalar_matrix(dgt, 2.0 * ds * x + 2.0 * s * h);
  }
  Point exact_project(const Point& z) const override {
    check_shape(z);
    const ThinSvd f = thin_svd(z.x);
    const LinfProjection r = linf_project(z.t, f.sigma);
    return Point::scalar_matrix(r.t, svd_compose(f.u, r.x, f.v));
  }
  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    const ThinSvd f = thin_svd(z.x);
    FaceDiagnostics d = epigraph_cases(z.t, f.sigma, tol);
    const Point x = exact_project(z);
    d.strictly_complementary = strict_pair(x, x - z, tol);
    return d;
  }

  /// Strict complementarity of x in K and y in the dual (nuclear) cone:
  /// x in relint of a face F and y in relint of its complementary face.
  static bool strict_pair(const Point& x, const Point& y, double tol) {
    const Vec sx = thin_svd(x.x).sigma;
    const Vec sy = thin_svd(y.x).sigma;
    const bool x_zero = std::abs(x.t) <= tol && (sx.size() == 0 || sx(0) <= tol);
    const bool y_zero = std::abs(y.t) <= tol && (sy.size() == 0 || sy(0) <= tol);
    if (y_zero) return x.t - (sx.size() ? sx(0) : 0.0) > tol;
    if (x_zero) return y.t - sy.sum() > tol;
    if (x.t <= tol || y.t <= tol) return false;
    const long on_face = (sx.array() >= x.t - tol).count();
    const long rank_y = (sy.array() > tol).count();
    return on_face == rank_y;
  }

 private:
  Eigen::LLT<Mat> factor(const Point& p) const {
    if (!(p.t > 0)) throw BoundaryOrExterior("opnorm: t must be positive");
    Eigen::LLT<Mat> llt(p.t * p.t * Mat::Identity(m_, m_) - p.x * p.x.transpose());
    if (llt.info() != Eigen::Success) throw BoundaryOrExterior("opnorm: t must exceed the operator norm");
    return llt;
  }
  int m_, n_;
};

/// Nuclear-norm epigraph {(t, x): t >= |x|_*} with the modified Fenchel
/// barrier f#(s) = f*(-s) of the operator-norm barrier.
class NuclearEpigraph final : public ConvexSet {
 public:
  NuclearEpigraph(int m, int n) : k_(m, n) {}

  SetKind kind() const override { return SetKind::NuclearEpigraph; }
  double theta() const override { return k_.theta(); }
  Point shape() const override { return k_.shape(); }
  Point interior_point() const override { return k_.interior_point(); }
  bool is_interior(const Point& p) const override {
    check_shape(p);
    return p.t > thin_svd(p.x).sigma.sum();
  }
  const OpNormEpigraph& polar_partner() const { return k_; }

  struct Conjugate {
    double t;     // of xhat
    Vec sigma;    // xhat = (t, u Diag(-sigma) v^T)
    ThinSvd f;    // of the matrix part of s
    double value; // f#(s)
  };

  /// Solves grad f(xhat) = -s for xhat in int K.
  Conjugate conjugate(const Point& s) const {
    check_interior(s);
    const int m = k_.m(), n = k_.n();
    Conjugate c;
    c.f = thin_svd(s.x);
    const Vec& vs = c.f.sigma;
    // Unknown y = (t, sigma) minimizing s_o t - vs.sigma + f(t, sigma).
    LogBarrierRows rows;
    const int extra = n > m ? 1 : 0;
    rows.a = Mat::Zero(2 * m + extra, m + 1);
    rows.b = Vec::Zero(2 * m + extra);
    rows.w = Vec::Ones(2 * m + extra);
    for (int i = 0; i < m; ++i) {
      rows.a(i, 0) = 1.0;
      rows.a(i, 1 + i) = -1.0;
      rows.a(m + i, 0) = 1.0;
      rows.a(m + i, 1 + i) = 1.0;
    }
    if (extra) {
      rows.a(2 * m, 0) = 1.0;
      rows.w(2 * m) = n - m;
    }
    Vec lin(m + 1);
    lin(0) = s.t;
    lin.tail(m) = -vs;
    Vec y = Vec::Zero(m + 1);
    y(0) = (m + n) / s.t;
    auto obj = [&](const Vec& v) { return lin.dot(v) + rows.value(rows.slacks(v)); };
    for (int it = 0; it < 500; ++it) {
      const Vec sl = rows.slacks(y);
      const Vec g = lin + rows.gradient(sl);
      Mat h(m + 1, m + 1);
      for (int j = 0; j <= m; ++j) h.col(j) = rows.hessian_apply(sl, Vec::Unit(m + 1, j));
      const Vec dy = -h.ldlt().solve(g);
      const double dec = -g.dot(dy);
      if (dec <= 1e-28 * (1.0 + std::abs(obj(y)))) break;
      double step = 1.0;
      const Vec sd = rows.a * dy;
      for (Eigen::Index i = 0; i < sl.size(); ++i)
        if (sd(i) < 0) step = std::min(step, -0.95 * sl(i) / sd(i));
      const double f0 = obj(y);
      // Inside the quadratic region the objective is too flat to compare in floating point.
      while (dec > 1e-8 && step > 1e-18) {
        const Vec yn = y + step * dy;
        if ((rows.slacks(yn).array() > 0).all() && obj(yn) <= f0 - 1e-4 * step * dec + 1e-15 * std::abs(f0)) break;
        step *= 0.5;
      }
      y += step * dy;
      if (dec < 1e-24) break;
    }
    c.t = y(0);
    c.sigma = y.tail(m);
    c.value = -obj(y);
    return c;
  }

  Point xhat(const Conjugate& c) const { return Point::scalar_matrix(c.t, svd_compose(c.f.u, -c.sigma, c.f.v)); }

  double barrier_value(const Point& p) const override { return conjugate(p).value; }
  Point barrier_gradient(const Point& p) const override { return -xhat(conjugate(p)); }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    const Point xh = xhat(conjugate(p));
    const Eigen::Index d = xh.dim();
    Mat h(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
      h.col(j) = to_flat(k_.barrier_hessian_apply(xh, from_flat(xh, Vec::Unit(d, j))));
    return from_flat(p, h.ldlt().solve(to_flat(u)));
  }
  Point exact_project(const Point& z) const override {
    check_shape(z);
    return z + k_.exact_project(-z);
  }
  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    FaceDiagnostics d = k_.diagnose(-z, tol);
    return d;
  }

 private:
  OpNormEpigraph k_;
};

/// Second-order cone in R^3, points (t, z) with z of shape 1 x 2.
class SecondOrderCone3 final : public ConvexSet {
 public:
  SetKind kind() const override { return SetKind::SecondOrderCone3; }
  double theta() const override { return 2.0; }
  Point shape() const override { return Point::scalar_matrix(0.0, Mat::Zero(1, 2)); }
  Point interior_point() const override { return Point::scalar_matrix(1.0, Mat::Zero(1, 2)); }
  bool is_interior(const Point& p) const override { return p.t > p.x.norm(); }

  double barrier_value(const Point& p) const override {
    check_interior(p);
    return -std::log(p.t * p.t - p.x.squaredNorm());
  }
  Point barrier_gradient(const Point& p) const override {
    check_interior(p);
    const double d = p.t * p.t - p.x.squaredNorm();
    return Point::scalar_matrix(-2.0 * p.t / d, 2.0 * p.x / d);
  }
  Point barrier_hessian_apply(const Point& p, const Point& u) const override {
    check_interior(p);
    const double d = p.t * p.t - p.x.squaredNorm();
    return hessian_apply_with(p, d, u);
  }
  /// Hessian action with the determinant t^2 - |z|^2 supplied separately.
  static Point hessian_apply_with(const Point& p, double d, const Point& u) {
    const double t = p.t;
    const Vec z = p.vec();
    const Vec h = u.vec();
    const double ho = u.t;
    const double out_t = (-2.0 / d + 4.0 * t * t / (d * d)) * ho - 4.0 * t / (d * d) * z.dot(h);
    const Vec out_z = -4.0 * t / (d * d) * z * ho + 2.0 / d * h + 4.0 / (d * d) * z * z.dot(h);
    return Point::scalar_matrix(out_t, out_z.transpose());
  }
  Point exact_project(const Point& z) const override {
    check_shape(z);
    const double r = z.x.norm();
    if (z.t >= r) return z;
    if (z.t <= -r) return z.zeros_like();
    const double a = 0.5 * (z.t + r);
    return Point::scalar_matrix(a, z.x * (a / r));
  }
  FaceDiagnostics diagnose(const Point& z, double tol) const override {
    check_shape(z);
    FaceDiagnostics d;
    d.tol = tol;
    const double r = z.x.norm();
    const double l1 = z.t - r, l2 = z.t + r;
    d.differentiable = std::abs(l1) > tol && std::abs(l2) > tol;
    d.indeterminate = !d.differentiable && l1 != 0 && l2 != 0;
    d.rank_info = (l1 > tol) + (l2 > tol);
    const Point x = exact_project(z);
    const Point y = x - z;
    const Point s = x + y;
    d.strictly_complementary = s.t - s.x.norm() > tol;
    return d;
  }
};

// Free-function forms.
inline double barrier_value(const ConvexSet& s, const Point& p) { return s.barrier_value(p); }
inline Point barrier_gradient(const ConvexSet& s, const Point& p) { return s.barrier_gradient(p); }
inline Point barrier_hessian_apply(const ConvexSet& s, const Point& p, const Point& u) {
  return s.barrier_hessian_apply(p, u);
}
inline Point exact_project(const ConvexSet& s, const Point& z) { return s.exact_project(z); }
inline FaceDiagnostics diagnose(const ConvexSet& s, const Point& z, double tol) { return s.diagnose(z, tol); }
inline FaceDiagnostics diagnose(const ConvexSet& s, const Point& z) { return s.diagnose(z, default_diag_tol(z)); }

inline SmoothedSet make_orthant(int n) { return std::make_shared<Orthant>(n); }
inline SmoothedSet make_psd(int n) { return std::make_shared<PsdCone>(n); }
inline SmoothedSet make_polyhedron(const Mat& a, const Vec& b) { return std::make_shared<Polyhedron>(a, b); }
inline SmoothedSet make_linf(int n) { return std::make_shared<LinfEpigraph>(n); }
inline SmoothedSet make_opnorm(int m, int n) { return std::make_shared<OpNormEpigraph>(m, n); }
inline SmoothedSet make_nuclear(int m, int n) { return std::make_shared<NuclearEpigraph>(m, n); }
inline SmoothedSet make_soc3() { return std::make_shared<SecondOrderCone3>(); }

}  // namespace ncvi
