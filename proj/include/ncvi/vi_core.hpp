#pragma once

#include <functional>
#include <optional>

#include "ncvi/smoothing.hpp"

namespace ncvi {

enum class Monotonicity { None, Monotone, Strong };

/// The map F with evaluation and Jacobian action.
struct VIMap {
  std::function<Point(const Point&)> eval;
  std::function<Point(const Point&, const Point&)> jacobian_apply;
  bool affine = false;
  Monotonicity monotonicity = Monotonicity::None;
  double rho = 0.0;  // strong monotonicity modulus when known
};

struct VIProblem {
  SmoothedSet set;
  VIMap map;
  std::optional<PairPoint> planted;
  std::string name;
};

struct Residuals {
  Point phi;          // x - p_mu(x - y)
  Point fgap;         // F(x) - y
  double merit = 0;   // |fgap| + |phi|
  double h_norm = 0;  // |H_mu(w)| = sqrt(|phi|^2 + |fgap|^2)
  double h0_norm = -1;  // |H_0(w)|, negative when not requested
  SmoothingEval eval;
};

inline PairPoint h_vector(const Residuals& r) { return {r.phi, r.fgap}; }

/// H_mu(w) and the merit Psi_mu(w); the exact natural-map norm |H_0(w)| is
/// also computed when `with_h0` is set.
inline Residuals smoothed_residual(const VIProblem& prob, const PairPoint& w, double mu, bool with_h0 = true) {
  require(mu >= 0, "smoothed_residual: mu >= 0");
  const Point& x = w.first;
  const Point& y = w.second;
  Residuals r;
  const Point fx = prob.map.eval(x);
  r.fgap = fx - y;
  const Point z = x - y;
  r.eval = smooth_project(*prob.set, z, mu);
  r.phi = x - r.eval.value;
  const double a = norm(r.phi), b = norm(r.fgap);
  r.merit = a + b;
  r.h_norm = std::hypot(a, b);
  if (mu == 0) {
    r.h0_norm = r.h_norm;
  } else if (with_h0) {
    const Point phi0 = x - prob.set->exact_project(z);
    r.h0_norm = std::hypot(norm(phi0), b);
  }
  return r;
}

/// H_0(w) = (x - Proj(x - y), F(x) - y).
inline PairPoint natural_map(const VIProblem& prob, const PairPoint& w) {
  const Point& x = w.first;
  const Point& y = w.second;
  return {x - prob.set->exact_project(x - y), prob.map.eval(x) - y};
}

inline double merit(const VIProblem& prob, const PairPoint& w, double mu) {
  return smoothed_residual(prob, w, mu, false).merit;
}

inline bool in_neighborhood(const VIProblem& prob, const PairPoint& w, double beta, double mu) {
  return merit(prob, w, mu) <= beta * mu;
}

/// DH_mu(w) = [[I - D, D], [DF(x), -I]] with D = Dp_mu(x - y), cached.
class DHOperator {
 public:
  DHOperator(const VIProblem& prob, const PairPoint& w, double mu, const SmoothingEval* eval = nullptr)
      : prob_(&prob), w_(w), d_(smooth_derivative_apply(*prob.set, w.first - w.second, mu, eval)) {
    require(mu > 0, "DHOperator: mu > 0");
  }

  PairPoint apply(const PairPoint& dw) const {
    const Point& u = dw.first;
    const Point& v = dw.second;
    return {u - d_(u - v), prob_->map.jacobian_apply(w_.first, u) - v};
  }

  Vec apply_flat(const Vec& v) const { return to_flat(apply(from_flat(w_, v))); }
  Eigen::Index dim() const { return w_.dim(); }
  const PairPoint& at() const { return w_; }

  Mat dense() const {
    const Eigen::Index n = dim();
    Mat out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) out.col(j) = apply_flat(Vec::Unit(n, j));
    return out;
  }

 private:
  const VIProblem* prob_;
  PairPoint w_;
  DerivativeApply d_;
};

inline PairPoint dh_apply(const VIProblem& prob, const PairPoint& w, double mu, const PairPoint& d) {
  return DHOperator(prob, w, mu).apply(d);
}

inline Mat assemble_dh(const VIProblem& prob, const PairPoint& w, double mu) { return DHOperator(prob, w, mu).dense(); }

}  // namespace ncvi
