#pragma once

#include <functional>

#include "ncvi/space.hpp"

namespace ncvi {

struct LinearOperator {
  Eigen::Index dim = 0;
  std::function<Vec(const Vec&)> apply;
};

struct LinSolveResult {
  Vec solution;
  double residual_norm = 0;  // |op x - rhs|, measured by an explicit apply
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
};

struct GmresOptions {
  int max_iter = 500;
  int restart = 50;
  /// Optional left preconditioner x -> M^{-1} x.
  std::function<Vec(const Vec&)> precond;
};

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations. The
/// returned residual is always recomputed from the operator.
inline LinSolveResult solve_inexact(const LinearOperator& op, const Vec& rhs, double rel_tol,
                                    const GmresOptions& opt = {}, const Vec* x0 = nullptr) {
  require(rel_tol > 0 && rel_tol < 1, "solve_inexact: rel_tol in (0,1)");
  require(rhs.size() == op.dim, "solve_inexact: dimension mismatch");
  const Eigen::Index n = op.dim;
  LinSolveResult res;
  res.solution = x0 ? *x0 : Vec::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0) {
    res.solution.setZero();
    res.converged = true;
    return res;
  }
  const double target = rel_tol * bnorm;
  auto prec = [&](const Vec& v) { return opt.precond ? opt.precond(v) : v; };
  const int m = std::max(1, std::min<int>(opt.restart, static_cast<int>(n)));

  Vec r = rhs - (x0 ? op.apply(res.solution) : Vec::Zero(n));
  double true_res = r.norm();
  if (true_res <= target) {
    res.residual_norm = true_res;
    res.converged = true;
    return res;
  }
  while (res.iterations < opt.max_iter) {
    Vec r0 = prec(r);
    const double beta = r0.norm();
    if (beta == 0) break;
    // Stop criterion for the preconditioned recurrence, rescaled to the true residual.
    const double inner_target = target * beta / std::max(true_res, 1e-300);
    Mat v(n, m + 1);
    Mat h = Mat::Zero(m + 1, m);
    Vec cs = Vec::Zero(m), sn = Vec::Zero(m), g = Vec::Zero(m + 1);
    v.col(0) = r0 / beta;
    g(0) = beta;
    int j = 0;
    bool lucky = false;
    for (; j < m && res.iterations < opt.max_iter; ++j) {
      ++res.iterations;
      Vec wv = prec(op.apply(v.col(j)));
      for (int i = 0; i <= j; ++i) {
        h(i, j) = v.col(i).dot(wv);
        wv -= h(i, j) * v.col(i);
      }
      h(j + 1, j) = wv.norm();
      if (h(j + 1, j) <= 1e-14 * std::abs(h(0, 0)) + 1e-300) lucky = true;
      else v.col(j + 1) = wv / h(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double tmp = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
        h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
        h(i, j) = tmp;
      }
      const double den = std::hypot(h(j, j), h(j + 1, j));
      cs(j) = den == 0 ? 1.0 : h(j, j) / den;
      sn(j) = den == 0 ? 0.0 : h(j + 1, j) / den;
      h(j, j) = cs(j) * h(j, j) + sn(j) * h(j + 1, j);
      h(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      if (std::abs(g(j + 1)) <= inner_target || lucky) {
        ++j;
        break;
      }
    }
    if (j > 0) {
      const Vec y = h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
      res.solution += v.leftCols(j) * y;
    }
    r = rhs - op.apply(res.solution);
    true_res = r.norm();
    if (true_res <= target) {
      res.converged = true;
      break;
    }
    if (lucky) {
      res.breakdown = true;
      break;
    }
  }
  res.residual_norm = true_res;
  return res;
}

/// Backward-stable dense solve; throws SingularMatrix.
inline Vec solve_dense(const Mat& a, const Vec& rhs) {
  require(a.rows() == a.cols() && a.rows() == rhs.size(), "solve_dense: dimension mismatch");
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw SingularMatrix("solve_dense: matrix is singular");
  Vec x = lu.solve(rhs);
  // One step of iterative refinement.
  x += lu.solve(rhs - a * x);
  return x;
}

}  // namespace ncvi
