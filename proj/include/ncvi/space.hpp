#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ncvi/errors.hpp"

namespace ncvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class PointKind { Vector, Sym, ScalarMatrix };

/// An element of the ambient space: a dense vector, a symmetric matrix, or a
/// (scalar, m x n matrix) pair with m <= n.
///
/// Vectors are stored as n x 1 matrices in `x`; `t` is only meaningful for
/// ScalarMatrix.
struct Point {
  PointKind kind = PointKind::Vector;
  double t = 0.0;
  Mat x;

  static Point vector(const Vec& v) {
    Point p;
    p.kind = PointKind::Vector;
    p.x = v;
    return p;
  }

  /// Builds a symmetric point from the upper triangle of `a`.
  static Point sym(const Mat& a) {
    require(a.rows() == a.cols(), "sym: matrix must be square");
    Point p;
    p.kind = PointKind::Sym;
    p.x = a.triangularView<Eigen::Upper>();
    p.x.triangularView<Eigen::StrictlyLower>() = p.x.transpose();
    return p;
  }

  static Point scalar_matrix(double t, const Mat& x) {
    require(x.rows() <= x.cols(), "scalar_matrix: requires m <= n, transpose first");
    Point p;
    p.kind = PointKind::ScalarMatrix;
    p.t = t;
    p.x = x;
    return p;
  }

  Vec vec() const { return Eigen::Map<const Vec>(x.data(), x.size()); }

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }

  /// Dimension of the underlying real vector space.
  Eigen::Index dim() const {
    switch (kind) {
      case PointKind::Vector:
        return x.size();
      case PointKind::Sym:
        return x.rows() * (x.rows() + 1) / 2;
      case PointKind::ScalarMatrix:
        return 1 + x.size();
    }
    return 0;
  }

  bool same_shape(const Point& o) const {
    return kind == o.kind && x.rows() == o.x.rows() && x.cols() == o.x.cols();
  }

  Point zeros_like() const {
    Point p = *this;
    p.t = 0.0;
    p.x.setZero();
    return p;
  }

  Point& operator+=(const Point& o) {
    require(same_shape(o), "point shape mismatch");
    t += o.t;
    x += o.x;
    return *this;
  }
  Point& operator-=(const Point& o) {
    require(same_shape(o), "point shape mismatch");
    t -= o.t;
    x -= o.x;
    return *this;
  }
  Point& operator*=(double a) {
    t *= a;
    x *= a;
    return *this;
  }
};

inline Point operator+(Point a, const Point& b) { return a += b; }
inline Point operator-(Point a, const Point& b) { return a -= b; }
inline Point operator*(double s, Point a) { return a *= s; }
inline Point operator-(Point a) { return a *= -1.0; }

inline double inner(const Point& a, const Point& b) {
  require(a.same_shape(b), "inner: shape mismatch");
  double s = (a.x.array() * b.x.array()).sum();
  if (a.kind == PointKind::ScalarMatrix) s += a.t * b.t;
  return s;
}

inline double norm(const Point& a) { return std::sqrt(inner(a, a)); }

/// Coordinates in an orthonormal basis. Symmetric matrices use the scaled
/// upper triangle (off-diagonals times sqrt(2)) so that the map is an isometry.
inline Vec to_flat(const Point& a) {
  Vec v(a.dim());
  switch (a.kind) {
    case PointKind::Vector:
      v = a.vec();
      break;
    case PointKind::Sym: {
      Eigen::Index k = 0;
      const double r2 = std::sqrt(2.0);
      for (Eigen::Index j = 0; j < a.x.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i) v(k++) = (i == j) ? a.x(i, j) : r2 * a.x(i, j);
      break;
    }
    case PointKind::ScalarMatrix:
      v(0) = a.t;
      v.tail(a.x.size()) = a.vec();
      break;
  }
  return v;
}

inline Point from_flat(const Point& shape, const Vec& v) {
  require(v.size() == shape.dim(), "from_flat: length mismatch");
  Point p = shape;
  switch (shape.kind) {
    case PointKind::Vector:
      p.x = v;
      break;
    case PointKind::Sym: {
      Eigen::Index k = 0;
      const double r2 = std::sqrt(2.0);
      for (Eigen::Index j = 0; j < p.x.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
          double val = (i == j) ? v(k) : v(k) / r2;
          p.x(i, j) = val;
          p.x(j, i) = val;
          ++k;
        }
      break;
    }
    case PointKind::ScalarMatrix:
      p.t = v(0);
      p.x = Eigen::Map<const Mat>(v.data() + 1, shape.x.rows(), shape.x.cols());
      break;
  }
  return p;
}

/// A pair (first, second) of equally shaped points, with the sum inner product.
struct PairPoint {
  Point first;
  Point second;

  Eigen::Index dim() const { return first.dim() + second.dim(); }

  PairPoint& operator+=(const PairPoint& o) {
    first += o.first;
    second += o.second;
    return *this;
  }
  PairPoint& operator*=(double a) {
    first *= a;
    second *= a;
    return *this;
  }
};

inline PairPoint operator+(PairPoint a, const PairPoint& b) { return a += b; }
inline PairPoint operator*(double s, PairPoint a) { return a *= s; }

inline double inner(const PairPoint& a, const PairPoint& b) {
  return inner(a.first, b.first) + inner(a.second, b.second);
}
inline double norm(const PairPoint& a) { return std::sqrt(inner(a, a)); }

inline Vec to_flat(const PairPoint& w) {
  Vec v(w.dim());
  v << to_flat(w.first), to_flat(w.second);
  return v;
}

inline PairPoint from_flat(const PairPoint& shape, const Vec& v) {
  const Eigen::Index d = shape.first.dim();
  require(v.size() == 2 * d, "from_flat: pair length mismatch");
  return {from_flat(shape.first, v.head(d)), from_flat(shape.second, v.tail(d))};
}

struct SymEigen {
  Mat q;       // orthogonal, columns are eigenvectors
  Vec lambda;  // descending
};

/// a = q Diag(lambda) q^T with lambda sorted non-increasing.
inline SymEigen sym_eigen(const Mat& a) {
  require(a.rows() == a.cols(), "sym_eigen: square matrix required");
  const Eigen::Index n = a.rows();
  if (n == 0) return {Mat(0, 0), Vec(0)};
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) throw FactorizationError("symmetric eigensolver did not converge");
  SymEigen out;
  out.q = es.eigenvectors().rowwise().reverse();
  out.lambda = es.eigenvalues().reverse();
  return out;
}

struct ThinSvd {
  Mat u;      // m x m
  Vec sigma;  // m, descending, >= 0
  Mat v;      // n x n
};

/// x = u [Diag(sigma) 0] v^T for x with m <= n, with the full n x n factor v.
inline ThinSvd thin_svd(const Mat& x) {
  require(x.rows() <= x.cols(), "thin_svd: requires m <= n");
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw FactorizationError("SVD did not converge");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Reassembles u [Diag(sigma) 0] v^T.
inline Mat svd_compose(const Mat& u, const Vec& sigma, const Mat& v) {
  const Eigen::Index m = u.rows();
  return u * sigma.asDiagonal() * v.leftCols(m).transpose();
}

}  // namespace ncvi
