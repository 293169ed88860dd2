#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ncvi/linsolve.hpp"
#include "ncvi/vi_core.hpp"

namespace ncvi {

enum class Theta2Mode { Constant, Superlinear, Quadratic };
enum class StepKind { Centering, NewtonAccepted, Terminated };
enum class SolveStatus { Solved, MaxIterations, LineSearchFailed, LinearSolveFailed };

inline std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::Centering: return "centering";
    case StepKind::NewtonAccepted: return "newton_accepted";
    case StepKind::Terminated: return "terminated";
  }
  return "?";
}

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "Solved";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::LineSearchFailed: return "LineSearchFailed";
    case SolveStatus::LinearSolveFailed: return "LinearSolveFailed";
  }
  return "?";
}

struct SolverConfig {
  double sigma = 0.25;
  double alpha1 = 0.5, alpha2 = 0.5, alpha3 = 0.5;
  double mu0 = 1.0;
  std::optional<double> beta;  // auto when empty
  double theta1 = 0.2;
  /// Optional schedule k -> theta1^(k); must stay within (0, theta1].
  std::function<double(int)> theta1_schedule;
  Theta2Mode theta2_mode = Theta2Mode::Quadratic;
  double theta2_const = 0.4;
  std::optional<double> tol_h0;  // auto: 1e-9 (1 + |F(x0)|)
  int max_outer = 200;
  GmresOptions linsolve;
  std::optional<PairPoint> w0;
  /// Dense dimension limit for the direct-solve fallback and diagnostics.
  Eigen::Index dense_limit = 200;
  /// Records the smallest singular value of the dense DH at each iterate.
  bool record_dh_svd = false;

  double theta1_at(int k) const { return theta1_schedule ? theta1_schedule(k) : theta1; }

  double theta2_at(double h0) const {
    switch (theta2_mode) {
      case Theta2Mode::Constant: return theta2_const;
      case Theta2Mode::Superlinear: return std::min(0.5, std::sqrt(h0));
      case Theta2Mode::Quadratic: return std::min(0.5, h0);
    }
    return 0.5;
  }

  void validate() const {
    auto in01 = [](double v) { return v > 0 && v < 1; };
    if (!in01(sigma)) throw ConfigInvalid("sigma must lie in (0,1)");
    if (!in01(alpha1) || !in01(alpha2) || !in01(alpha3)) throw ConfigInvalid("alpha1..3 must lie in (0,1)");
    if (!in01(theta1)) throw ConfigInvalid("theta1 must lie in (0,1)");
    if (!(sigma + std::sqrt(2.0) * theta1 < 1.0))
      throw ConfigInvalid("sigma + sqrt(2) theta1 must be < 1");
    if (!(mu0 > 0)) throw ConfigInvalid("mu0 must be positive");
    if (theta2_mode == Theta2Mode::Constant && !in01(theta2_const)) throw ConfigInvalid("theta2 must lie in (0,1)");
    if (tol_h0 && !(*tol_h0 > 0)) throw ConfigInvalid("tol must be positive");
    if (max_outer < 1) throw ConfigInvalid("max_outer must be >= 1");
    if (linsolve.max_iter < 1 || linsolve.restart < 1) throw ConfigInvalid("linear solver limits must be >= 1");
  }
};

struct IterateState {
  int k = 0;
  PairPoint w;
  double mu = 0;
  double merit = 0;    // Psi_mu(w)
  double h_norm = 0;   // |H_mu(w)|
  double h0_norm = 0;  // |H_0(w)|
  StepKind step_kind = StepKind::Centering;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  double theta1 = std::numeric_limits<double>::quiet_NaN();
  double theta2 = std::numeric_limits<double>::quiet_NaN();
  int lin_iters = 0;
  double lin_residual = std::numeric_limits<double>::quiet_NaN();   // |r1|
  double lin_residual2 = std::numeric_limits<double>::quiet_NaN();  // |r2|
  double dir_centering = std::numeric_limits<double>::quiet_NaN();  // |dw~|
  double dir_newton = std::numeric_limits<double>::quiet_NaN();     // |dw^|
  double dh_sigma_min = std::numeric_limits<double>::quiet_NaN();
  bool dense_fallback = false;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<IterateState> trace;
  PairPoint solution;
  double beta = 0;
  double tol_h0 = 0;
  double theta = 0;
  double order_estimate = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> inverse_norm_max;
  std::string message;

  int outer_iterations() const { return trace.empty() ? 0 : trace.back().k; }
  int total_krylov() const {
    int s = 0;
    for (const auto& r : trace) s += r.lin_iters;
    return s;
  }
};

/// x0 a canonical interior point, y0 = F(x0), beta = 1.05 max(sqrt(theta), Psi_mu0(w0) / mu0).
inline std::pair<PairPoint, double> auto_initialize(const VIProblem& prob, double mu0) {
  require(mu0 > 0, "auto_initialize: mu0 > 0");
  const Point x0 = prob.set->interior_point();
  PairPoint w0{x0, prob.map.eval(x0)};
  const double psi = merit(prob, w0, mu0);
  const double beta = 1.05 * std::max(std::sqrt(prob.set->theta()), psi / mu0);
  return {w0, beta};
}

/// Least-squares slope of log e_{k+1} against log e_k over the trailing
/// window of decreasing errors above 1e-14 (at most `window` points).
inline double estimate_order(const std::vector<double>& errors, int window = 5) {
  std::vector<double> e;
  // Trailing run of strictly decreasing values above the floor.
  int end = static_cast<int>(errors.size());
  while (end > 0 && !(errors[end - 1] > 1e-14)) --end;
  int start = end - 1;
  while (start > 0 && errors[start - 1] > errors[start] && errors[start - 1] > 1e-14) --start;
  if (start < 0 || end - start < 4) throw InsufficientData("need at least 4 trailing decreasing errors");
  start = std::max(start, end - window);
  for (int i = start; i < end; ++i) e.push_back(std::log(errors[i]));
  const int n = static_cast<int>(e.size()) - 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += e[i];
    sy += e[i + 1];
    sxx += e[i] * e[i];
    sxy += e[i] * e[i + 1];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0) throw InsufficientData("degenerate error sequence");
  return (n * sxy - sx * sy) / den;
}

/// Trace form. A final iterate reached through the mu -> 0 exit of the
/// centering branch is left out: that step is governed by theta1 and the
/// stopping rule, not by the Newton recurrence whose order is being measured.
inline double estimate_order(const std::vector<IterateState>& trace, const PairPoint& w_star, int window = 5) {
  std::vector<double> e;
  size_t end = trace.size();
  if (end >= 2 && trace[end - 2].gamma == 1.0) --end;
  for (size_t i = 0; i < end; ++i) {
    const auto& s = trace[i];
    PairPoint d = s.w;
    d.first -= w_star.first;
    d.second -= w_star.second;
    e.push_back(norm(d));
  }
  return estimate_order(e, window);
}

/// R^2 of the least-squares line through (k, log h_k).
inline double loglinear_r2(const std::vector<double>& h) {
  std::vector<double> x, y;
  for (size_t i = 0; i < h.size(); ++i)
    if (h[i] > 0) {
      x.push_back(static_cast<double>(i));
      y.push_back(std::log(h[i]));
    }
  const double n = static_cast<double>(x.size());
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

namespace detail {

struct DirectionSolve {
  PairPoint dir;
  double residual = 0;
  int iters = 0;
  bool ok = false;
  bool dense = false;
};

/// Inexact solve with escalation: GMRES at theta, again at theta / 2, then a
/// dense direct solve when the dimension allows it.
inline DirectionSolve solve_direction(const DHOperator& dh, const PairPoint& rhs, double theta,
                                      const SolverConfig& cfg) {
  DirectionSolve out;
  LinearOperator op{dh.dim(), [&](const Vec& v) { return dh.apply_flat(v); }};
  const Vec b = to_flat(rhs);
  const double bn = b.norm();
  LinSolveResult r = solve_inexact(op, b, theta, cfg.linsolve);
  out.iters = r.iterations;
  if (!r.converged) {
    const Vec x0 = r.solution;
    r = solve_inexact(op, b, 0.5 * theta, cfg.linsolve, &x0);
    out.iters += r.iterations;
  }
  if (r.converged) {
    out.dir = from_flat(dh.at(), r.solution);
    out.residual = r.residual_norm;
    out.ok = true;
    return out;
  }
  if (dh.dim() <= cfg.dense_limit) {
    try {
      const Mat a = dh.dense();
      const Vec x = solve_dense(a, b);
      out.residual = (a * x - b).norm();
      out.dir = from_flat(dh.at(), x);
      out.dense = true;
      out.ok = out.residual <= theta * bn;
    } catch (const SingularMatrix&) {
      out.ok = false;
    }
  }
  return out;
}

}  // namespace detail

/// The inexact non-interior continuation method.
inline SolveReport solve(const VIProblem& prob, const SolverConfig& cfg_in) {
  SolverConfig cfg = cfg_in;
  cfg.validate();
  SolveReport rep;
  auto [w0_auto, beta_auto] = auto_initialize(prob, cfg.mu0);
  PairPoint w = cfg.w0 ? *cfg.w0 : w0_auto;
  double mu = cfg.mu0;
  const double sqrt_theta = std::sqrt(prob.set->theta());
  double beta;
  if (cfg.beta) {
    beta = *cfg.beta;
    if (!(beta > sqrt_theta)) throw ConfigInvalid("beta must exceed sqrt(theta)");
    if (!in_neighborhood(prob, w, beta, mu)) throw ConfigInvalid("w0 is not in the neighbourhood N(beta, mu0)");
  } else {
    beta = 1.05 * std::max(sqrt_theta, merit(prob, w, mu) / mu);
  }
  const double tol = cfg.tol_h0 ? *cfg.tol_h0 : 1e-9 * (1.0 + norm(prob.map.eval(prob.set->interior_point())));
  rep.beta = beta;
  rep.tol_h0 = tol;
  rep.theta = prob.set->theta();

  auto finish = [&](SolveStatus st, const PairPoint& sol, double mu_f, const std::string& msg) {
    rep.status = st;
    rep.solution = sol;
    rep.message = msg;
    IterateState last;
    last.k = rep.trace.empty() ? 0 : rep.trace.back().k + 1;
    last.w = sol;
    last.mu = mu_f;
    const Residuals r = smoothed_residual(prob, sol, mu_f);
    last.merit = r.merit;
    last.h_norm = r.h_norm;
    last.h0_norm = r.h0_norm;
    last.step_kind = StepKind::Terminated;
    rep.trace.push_back(last);
  };

  for (int k = 0;; ++k) {
    IterateState st;
    st.k = k;
    st.w = w;
    st.mu = mu;
    const Residuals r = smoothed_residual(prob, w, mu);
    st.merit = r.merit;
    st.h_norm = r.h_norm;
    st.h0_norm = r.h0_norm;
    if (r.h0_norm <= tol) {
      rep.trace.push_back(st);
      rep.trace.back().step_kind = StepKind::Terminated;
      rep.status = SolveStatus::Solved;
      rep.solution = w;
      break;
    }
    if (k >= cfg.max_outer) {
      rep.trace.push_back(st);
      rep.trace.back().step_kind = StepKind::Terminated;
      rep.status = SolveStatus::MaxIterations;
      rep.solution = w;
      rep.message = "outer iteration limit reached";
      break;
    }
    const DHOperator dh(prob, w, mu, &r.eval);
    if (cfg.record_dh_svd && dh.dim() <= cfg.dense_limit) {
      Eigen::JacobiSVD<Mat> svd(dh.dense());
      st.dh_sigma_min = svd.singularValues().minCoeff();
      const double inv = 1.0 / st.dh_sigma_min;
      rep.inverse_norm_max = rep.inverse_norm_max ? std::max(*rep.inverse_norm_max, inv) : inv;
    }

    // Steps 1-2: centering direction and line search.
    PairPoint wt = w;
    st.theta1 = cfg.theta1_at(k);
    if (r.merit <= 1e-15 * (1.0 + norm(w))) {
      st.lambda = 0.0;
    } else {
      const detail::DirectionSolve ds = detail::solve_direction(dh, -1.0 * h_vector(r), st.theta1, cfg);
      st.lin_iters += ds.iters;
      st.lin_residual = ds.residual;
      st.dense_fallback = ds.dense;
      if (!ds.ok) {
        rep.trace.push_back(st);
        rep.status = SolveStatus::LinearSolveFailed;
        rep.solution = w;
        rep.message = "centering system could not be solved to tolerance";
        break;
      }
      st.dir_centering = norm(ds.dir);
      double lam = 1.0;
      bool found = false;
      for (int trial = 0; trial < 60; ++trial) {
        const PairPoint cand = w + lam * ds.dir;
        if (merit(prob, cand, mu) <= (1.0 - cfg.sigma * lam) * r.merit) {
          found = true;
          break;
        }
        lam *= cfg.alpha1;
      }
      if (!found) {
        rep.trace.push_back(st);
        rep.status = SolveStatus::LineSearchFailed;
        rep.solution = w;
        rep.message = "centering line search exhausted 60 trials";
        break;
      }
      st.lambda = lam;
      wt = w + lam * ds.dir;
    }

    // Step 3: mu reduction along the centering step.
    double gamma = 1.0;
    bool found = false;
    for (int trial = 0; trial < 200; ++trial) {
      const double m2 = (1.0 - gamma) * mu;
      if (gamma == 1.0) {
        if (merit(prob, wt, 0.0) <= tol) {
          found = true;
          break;
        }
      } else if (m2 > 0 && merit(prob, wt, m2) <= beta * m2) {
        found = true;
        break;
      }
      gamma *= cfg.alpha2;
    }
    if (!found) {
      rep.trace.push_back(st);
      rep.status = SolveStatus::LineSearchFailed;
      rep.solution = w;
      rep.message = "mu reduction search failed";
      break;
    }
    st.gamma = gamma;
    if (gamma == 1.0) {
      rep.trace.push_back(st);
      finish(SolveStatus::Solved, wt, 0.0, "");
      break;
    }
    const double mu_t = (1.0 - gamma) * mu;

    // Step 4: approximate Newton step on H_0.
    const PairPoint h0 = natural_map(prob, w);
    st.theta2 = cfg.theta2_at(r.h0_norm);
    const detail::DirectionSolve dn = detail::solve_direction(dh, -1.0 * h0, st.theta2, cfg);
    st.lin_iters += dn.iters;
    st.lin_residual2 = dn.residual;
    st.dense_fallback = st.dense_fallback || dn.dense;
    if (!dn.ok) {
      rep.trace.push_back(st);
      rep.status = SolveStatus::LinearSolveFailed;
      rep.solution = w;
      rep.message = "Newton system could not be solved to tolerance";
      break;
    }
    st.dir_newton = norm(dn.dir);
    const PairPoint wh = w + dn.dir;

    // Step 5: accept the Newton step if it stays in the neighbourhood.
    if (merit(prob, wh, mu_t) > beta * mu_t) {
      st.step_kind = StepKind::Centering;
      rep.trace.push_back(st);
      w = wt;
      mu = mu_t;
      continue;
    }
    const Residuals rh = smoothed_residual(prob, wh, mu_t);
    if (rh.h0_norm <= tol) {
      st.step_kind = StepKind::NewtonAccepted;
      st.eta = 1.0;
      rep.trace.push_back(st);
      rep.status = SolveStatus::Solved;
      rep.solution = wh;
      IterateState last;
      last.k = k + 1;
      last.w = wh;
      last.mu = mu_t;
      last.merit = rh.merit;
      last.h_norm = rh.h_norm;
      last.h0_norm = rh.h0_norm;
      last.step_kind = StepKind::Terminated;
      rep.trace.push_back(last);
      break;
    }
    double eta = 1.0;
    for (int trial = 0; trial < 2000; ++trial) {
      const double next = eta * cfg.alpha3 * mu_t;
      if (next < 1e-300) break;
      if (merit(prob, wh, next) > beta * next) break;
      eta *= cfg.alpha3;
    }
    st.eta = eta;
    st.step_kind = StepKind::NewtonAccepted;
    rep.trace.push_back(st);
    w = wh;
    mu = eta * mu_t;
  }

  try {
    const PairPoint ref = prob.planted ? *prob.planted : rep.solution;
    rep.order_estimate = estimate_order(rep.trace, ref);
  } catch (const InsufficientData&) {
  }
  return rep;
}

inline void write_trace_csv(std::ostream& out, const SolveReport& rep) {
  out << "k,mu,merit,h0_norm,step_kind,lambda,gamma,eta,lin_iters,lin_residual\n";
  out.precision(17);
  for (const auto& s : rep.trace) {
    out << s.k << "," << s.mu << "," << s.merit << "," << s.h0_norm << "," << to_string(s.step_kind) << ","
        << s.lambda << "," << s.gamma << "," << s.eta << "," << s.lin_iters << "," << s.lin_residual << "\n";
  }
}

}  // namespace ncvi
