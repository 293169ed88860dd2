#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ncvi/matrix_market.hpp"
#include "ncvi/vi_core.hpp"

namespace ncvi {

enum class MapType { Affine, AffinePlusLogSumExp, AffinePlusArctan };

inline std::string to_string(MapType t) {
  switch (t) {
    case MapType::Affine: return "affine";
    case MapType::AffinePlusLogSumExp: return "affine_plus_logsumexp";
    case MapType::AffinePlusArctan: return "affine_plus_arctan";
  }
  return "?";
}

inline MapType map_type_from_string(const std::string& s) {
  if (s == "affine") return MapType::Affine;
  if (s == "affine_plus_logsumexp") return MapType::AffinePlusLogSumExp;
  if (s == "affine_plus_arctan") return MapType::AffinePlusArctan;
  throw ParseError("map.type: unknown map '" + s + "'");
}

inline SetKind set_kind_from_string(const std::string& s) {
  for (SetKind k : {SetKind::Orthant, SetKind::PsdCone, SetKind::Polyhedron, SetKind::LinfEpigraph,
                    SetKind::OpNormEpigraph, SetKind::NuclearEpigraph, SetKind::SecondOrderCone3})
    if (to_string(k) == s) return k;
  throw ParseError("set.kind: unknown set '" + s + "'");
}

struct SetDescriptor {
  SetKind kind = SetKind::Orthant;
  int n = 0;  // vector length, matrix order, or matrix columns
  int m = 0;  // matrix rows for the epigraph sets
  Mat a;      // polyhedron only
  Vec b;
};

/// F(x) = M x + q + scale * grad g(x), acting on flat coordinates.
struct MapDescriptor {
  MapType type = MapType::Affine;
  Mat m;
  Vec q;
  double scale = 1.0;
};

struct ProblemManifest {
  std::string name;
  SetDescriptor set;
  MapDescriptor map;
  std::optional<Vec> planted_x, planted_y;  // flat coordinates
  std::uint64_t seed = 0;
};

inline SmoothedSet build_set(const SetDescriptor& d) {
  switch (d.kind) {
    case SetKind::Orthant: return make_orthant(d.n);
    case SetKind::PsdCone: return make_psd(d.n);
    case SetKind::Polyhedron: return make_polyhedron(d.a, d.b);
    case SetKind::LinfEpigraph: return make_linf(d.n);
    case SetKind::OpNormEpigraph: return make_opnorm(d.m, d.n);
    case SetKind::NuclearEpigraph: return make_nuclear(d.m, d.n);
    case SetKind::SecondOrderCone3: return make_soc3();
  }
  throw ContractViolation("build_set: unknown kind");
}

inline VIMap build_map(const MapDescriptor& d, const Point& shape) {
  if (d.m.rows() != d.m.cols() || d.m.rows() != d.q.size())
    throw DimensionMismatch("map: M is " + std::to_string(d.m.rows()) + "x" + std::to_string(d.m.cols()) +
                            " but q has length " + std::to_string(d.q.size()));
  if (d.q.size() != shape.dim())
    throw DimensionMismatch("map dimension " + std::to_string(d.q.size()) + " does not match set dimension " +
                            std::to_string(shape.dim()));
  const Mat m = d.m;
  const Vec q = d.q;
  const double c = d.scale;
  const MapType type = d.type;
  VIMap f;
  f.eval = [m, q, c, type, shape](const Point& x) {
    const Vec v = to_flat(x);
    Vec out = m * v + q;
    if (type == MapType::AffinePlusLogSumExp) {
      const double mx = v.maxCoeff();
      Vec s = (v.array() - mx).exp();
      s /= s.sum();
      out += c * s;
    } else if (type == MapType::AffinePlusArctan) {
      out += c * v.array().atan().matrix();
    }
    return from_flat(shape, out);
  };
  f.jacobian_apply = [m, c, type, shape](const Point& x, const Point& u) {
    const Vec du = to_flat(u);
    Vec out = m * du;
    if (type == MapType::AffinePlusLogSumExp) {
      const Vec v = to_flat(x);
      const double mx = v.maxCoeff();
      Vec s = (v.array() - mx).exp();
      s /= s.sum();
      out += c * (s.cwiseProduct(du) - s * s.dot(du));
    } else if (type == MapType::AffinePlusArctan) {
      const Vec v = to_flat(x);
      out += c * (du.array() / (1.0 + v.array().square())).matrix();
    }
    return from_flat(shape, out);
  };
  f.affine = type == MapType::Affine;
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double eps = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (lmin > eps) {
    f.monotonicity = Monotonicity::Strong;
    f.rho = lmin;
  } else if (lmin >= -eps) {
    f.monotonicity = Monotonicity::Monotone;
  }
  return f;
}

inline VIProblem build_problem(const ProblemManifest& man) {
  VIProblem p;
  p.set = build_set(man.set);
  const Point shape = p.set->shape();
  p.map = build_map(man.map, shape);
  p.name = man.name;
  if (man.planted_x.has_value() != man.planted_y.has_value())
    throw ParseError("planted: both x and y are required");
  if (man.planted_x) {
    if (man.planted_x->size() != shape.dim() || man.planted_y->size() != shape.dim())
      throw DimensionMismatch("planted solution length does not match set dimension");
    p.planted = PairPoint{from_flat(shape, *man.planted_x), from_flat(shape, *man.planted_y)};
  }
  return p;
}

/// Natural-map residual of the planted pair; zero when (x, y) solves the VI.
inline double planted_residual(const VIProblem& p) {
  require(p.planted.has_value(), "planted_residual: no planted solution");
  return norm(natural_map(p, *p.planted));
}

// ---------------------------------------------------------------------------
// File format.

namespace detail {

inline Vec read_csv_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::vector<double> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      if (cell.empty()) continue;
      try {
        size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
  }
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline void write_csv_vector(const std::filesystem::path& path, const Vec& v) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot write");
  out.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i) << "\n";
}

inline Vec matrix_to_vector(const Mat& a, const std::string& what) {
  if (a.cols() == 1) return a.col(0);
  if (a.rows() == 1) return a.row(0).transpose();
  throw DimensionMismatch(what + ": expected a vector, got " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
}

template <class T>
T field(const nlohmann::json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ctx + "." + key + ": " + e.what());
  }
}

}  // namespace detail

/// Reads a JSON manifest; relative file references resolve against the
/// manifest's directory. Vectors may also be given inline as JSON arrays.
inline ProblemManifest load_manifest_data(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const auto dir = path.parent_path();
  auto load_mat = [&](const nlohmann::json& node, const std::string& ctx) -> Mat {
    if (node.is_string()) return read_matrix_market((dir / node.get<std::string>()).string());
    if (node.is_array() && !node.empty() && node[0].is_array()) {
      std::vector<std::vector<double>> rows;
      try {
        rows = node.get<std::vector<std::vector<double>>>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(ctx + ": " + e.what());
      }
      Mat a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw ParseError(ctx + ": rows of unequal length");
        for (size_t k = 0; k < rows[i].size(); ++k) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
      return a;
    }
    if (node.is_array()) {
      std::vector<double> v;
      try {
        v = node.get<std::vector<double>>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(ctx + ": " + e.what());
      }
      return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    throw ParseError(ctx + ": expected a file name or an array");
  };
  auto load_vec = [&](const nlohmann::json& node, const std::string& ctx) -> Vec {
    if (node.is_string()) {
      const std::string f = node.get<std::string>();
      if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") return detail::read_csv_vector(dir / f);
    }
    return detail::matrix_to_vector(load_mat(node, ctx), ctx);
  };

  ProblemManifest man;
  man.name = j.value("name", path.stem().string());
  man.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("set") || !j["set"].is_object()) throw ParseError(path.string() + ": missing table 'set'");
  if (!j.contains("map") || !j["map"].is_object()) throw ParseError(path.string() + ": missing table 'map'");
  const auto& js = j["set"];
  const auto& jm = j["map"];

  man.map.type = map_type_from_string(jm.value("type", std::string("affine")));
  man.map.scale = jm.value("scale", 1.0);
  man.map.q = load_vec(detail::field<nlohmann::json>(jm, "q", "map"), "map.q");
  if (jm.contains("M")) {
    man.map.m = load_mat(jm["M"], "map.M");
  } else {
    man.map.m = Mat::Identity(man.map.q.size(), man.map.q.size());
  }

  man.set.kind = set_kind_from_string(detail::field<std::string>(js, "kind", "set"));
  man.set.n = js.value("n", 0);
  man.set.m = js.value("m", 0);
  switch (man.set.kind) {
    case SetKind::Orthant:
    case SetKind::LinfEpigraph:
      if (man.set.n == 0)
        man.set.n = static_cast<int>(man.map.q.size()) - (man.set.kind == SetKind::LinfEpigraph ? 1 : 0);
      break;
    case SetKind::Polyhedron:
      man.set.a = load_mat(detail::field<nlohmann::json>(js, "A", "set"), "set.A");
      man.set.b = load_vec(detail::field<nlohmann::json>(js, "b", "set"), "set.b");
      if (man.set.a.rows() != man.set.b.size())
        throw DimensionMismatch("set: A has " + std::to_string(man.set.a.rows()) + " rows but b has length " +
                                std::to_string(man.set.b.size()));
      man.set.n = static_cast<int>(man.set.a.cols());
      break;
    case SetKind::OpNormEpigraph:
    case SetKind::NuclearEpigraph:
      if (man.set.m < 1 || man.set.n < man.set.m) throw ParseError("set: epigraph sets need 1 <= m <= n");
      break;
    case SetKind::PsdCone:
      if (man.set.n < 1) throw ParseError("set: psd needs n >= 1");
      break;
    case SetKind::SecondOrderCone3: break;
  }
  if (man.set.n < 0 || man.set.m < 0) throw ParseError("set: negative dimension");

  if (j.contains("planted")) {
    const auto& jp = j["planted"];
    man.planted_x = load_vec(detail::field<nlohmann::json>(jp, "x", "planted"), "planted.x");
    man.planted_y = load_vec(detail::field<nlohmann::json>(jp, "y", "planted"), "planted.y");
  }
  return man;
}

inline VIProblem load_manifest(const std::filesystem::path& path) { return build_problem(load_manifest_data(path)); }

/// Writes `<stem>.json` plus Matrix Market and CSV payloads into `dir`.
inline std::filesystem::path save_manifest(const ProblemManifest& man, const std::filesystem::path& dir,
                                           const std::string& stem) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["name"] = man.name;
  j["seed"] = man.seed;
  nlohmann::json js;
  js["kind"] = to_string(man.set.kind);
  if (man.set.kind != SetKind::SecondOrderCone3) js["n"] = man.set.n;
  if (man.set.kind == SetKind::OpNormEpigraph || man.set.kind == SetKind::NuclearEpigraph) js["m"] = man.set.m;
  if (man.set.kind == SetKind::Polyhedron) {
    write_matrix_market((dir / (stem + "_A.mtx")).string(), man.set.a);
    write_matrix_market((dir / (stem + "_b.mtx")).string(), man.set.b);
    js["A"] = stem + "_A.mtx";
    js["b"] = stem + "_b.mtx";
  }
  j["set"] = js;
  nlohmann::json jm;
  jm["type"] = to_string(man.map.type);
  if (man.map.type != MapType::Affine) jm["scale"] = man.map.scale;
  write_matrix_market((dir / (stem + "_M.mtx")).string(), man.map.m);
  write_matrix_market((dir / (stem + "_q.mtx")).string(), man.map.q);
  jm["M"] = stem + "_M.mtx";
  jm["q"] = stem + "_q.mtx";
  j["map"] = jm;
  if (man.planted_x && man.planted_y) {
    detail::write_csv_vector(dir / (stem + "_xstar.csv"), *man.planted_x);
    detail::write_csv_vector(dir / (stem + "_ystar.csv"), *man.planted_y);
    j["planted"] = {{"x", stem + "_xstar.csv"}, {"y", stem + "_ystar.csv"}};
  }
  const auto path = dir / (stem + ".json");
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot write");
  out << j.dump(2) << "\n";
  return path;
}

// ---------------------------------------------------------------------------
// Generators with planted solutions.

namespace detail {

inline Mat gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Mat a(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) a(i, j) = nd(rng);
  return a;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// A^T A / d + delta I + S with S skew, all of order d.
inline Mat monotone_matrix(std::mt19937_64& rng, Eigen::Index d, double delta) {
  const Mat a = gaussian(rng, d, d) / std::sqrt(static_cast<double>(d));
  const Mat g = gaussian(rng, d, d) / std::sqrt(static_cast<double>(d));
  return a.transpose() * a + delta * Mat::Identity(d, d) + 0.5 * (g - g.transpose());
}

inline Mat random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<Mat> qr(gaussian(rng, n, n));
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  return q;
}

inline std::vector<int> permutation(std::mt19937_64& rng, int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline ProblemManifest finish_affine(ProblemManifest man, const Mat& m, const Point& xs, const Point& ys) {
  man.map.type = MapType::Affine;
  man.map.m = m;
  const Vec x = to_flat(xs), y = to_flat(ys);
  man.map.q = y - m * x;
  man.planted_x = x;
  man.planted_y = y;
  return man;
}

}  // namespace detail

/// LCP over the orthant. The degenerate variant has one index with x* = y* = 0.
inline ProblemManifest generate_lcp(int n, bool strong_mono, bool strictly_complementary, std::uint64_t seed) {
  require(n >= 1, "generate_lcp: n >= 1");
  std::mt19937_64 rng(seed);
  ProblemManifest man;
  man.name = "lcp_n" + std::to_string(n) + (strictly_complementary ? "_strict" : "_degenerate");
  man.seed = seed;
  man.set.kind = SetKind::Orthant;
  man.set.n = n;
  const Mat m = detail::monotone_matrix(rng, n, strong_mono ? 1.0 : 0.0);
  const auto perm = detail::permutation(rng, n);
  Vec x = Vec::Zero(n), y = Vec::Zero(n);
  const int first = strictly_complementary ? 0 : 1;  // perm[0] is the degenerate index
  const int rest = n - first;
  const int np = (rest + 1) / 2;
  for (int i = first; i < n; ++i) {
    if (i - first < np) x(perm[i]) = detail::uniform(rng, 0.5, 2.0);
    else y(perm[i]) = 1.0;
  }
  return detail::finish_affine(man, m, Point::vector(x), Point::vector(y));
}

/// SDCP over the PSD cone with a shared eigenbasis. The degenerate variant
/// leaves one eigen-direction where both X* and Y* vanish.
inline ProblemManifest generate_sdcp(int n, int rank_r, bool strictly_complementary, std::uint64_t seed) {
  require(n >= 1 && rank_r >= 0 && rank_r <= n, "generate_sdcp: 0 <= r <= n");
  require(strictly_complementary || rank_r < n, "generate_sdcp: degenerate needs r < n");
  std::mt19937_64 rng(seed);
  ProblemManifest man;
  man.name = "sdcp_n" + std::to_string(n) + "_r" + std::to_string(rank_r) +
             (strictly_complementary ? "_strict" : "_degenerate");
  man.seed = seed;
  man.set.kind = SetKind::PsdCone;
  man.set.n = n;
  const Mat q = detail::random_orthogonal(rng, n);
  Vec lx = Vec::Zero(n), ly = Vec::Zero(n);
  for (int i = 0; i < rank_r; ++i) lx(i) = detail::uniform(rng, 0.5, 2.0);
  for (int i = rank_r + (strictly_complementary ? 0 : 1); i < n; ++i) ly(i) = detail::uniform(rng, 0.5, 2.0);
  const Point xs = Point::sym(q * lx.asDiagonal() * q.transpose());
  const Point ys = Point::sym(q * ly.asDiagonal() * q.transpose());
  const Mat m = detail::monotone_matrix(rng, xs.dim(), 1.0);
  return detail::finish_affine(man, m, xs, ys);
}

/// VI over a random polyhedron {x : A x >= b} with n/2 independent active rows
/// at x*. y* = A_I^T lambda with lambda > 0, or one lambda = 0 when degenerate.
inline ProblemManifest generate_polyhedral_vi(int n, int m, bool strictly_complementary, std::uint64_t seed) {
  const int k = std::max(1, n / 2);
  require(n >= 1 && m >= k, "generate_polyhedral_vi: need m >= max(1, n/2)");
  std::mt19937_64 rng(seed);
  ProblemManifest man;
  man.name = "polyhedral_n" + std::to_string(n) + "_m" + std::to_string(m) +
             (strictly_complementary ? "_strict" : "_degenerate");
  man.seed = seed;
  man.set.kind = SetKind::Polyhedron;
  man.set.n = n;
  Mat a = detail::gaussian(rng, m, n);
  for (int i = 0; i < m; ++i) a.row(i).normalize();
  Vec xs(n);
  for (int i = 0; i < n; ++i) xs(i) = detail::uniform(rng, -1.0, 1.0);
  Vec b = a * xs;
  for (int i = k; i < m; ++i) b(i) -= detail::uniform(rng, 0.5, 1.5);
  Vec lam = Vec::Zero(m);
  for (int i = 0; i < k; ++i) lam(i) = detail::uniform(rng, 0.5, 2.0);
  if (!strictly_complementary) lam(k - 1) = 0.0;
  man.set.a = a;
  man.set.b = b;
  const Vec ys = a.transpose() * lam;
  const Mat mm = detail::monotone_matrix(rng, n, 1.0);
  return detail::finish_affine(man, mm, Point::vector(xs), Point::vector(ys));
}

/// VI over the operator-norm epigraph. x* = (t, U diag(sigma) V^T) with the top
/// s singular values equal to t; y* = (sum nu, -U diag(nu) V^T) with nu > 0 on
/// those s directions (one nu = 0 when degenerate).
inline ProblemManifest generate_opnorm_vi(int m, int n, bool strictly_complementary, std::uint64_t seed) {
  require(m >= 1 && m <= n, "generate_opnorm_vi: 1 <= m <= n");
  std::mt19937_64 rng(seed);
  ProblemManifest man;
  man.name = "opnorm_" + std::to_string(m) + "x" + std::to_string(n) +
             (strictly_complementary ? "_strict" : "_degenerate");
  man.seed = seed;
  man.set.kind = SetKind::OpNormEpigraph;
  man.set.m = m;
  man.set.n = n;
  const Mat u = detail::random_orthogonal(rng, m);
  const Mat v = detail::random_orthogonal(rng, n);
  const int s = std::max(1, (m + 1) / 2);
  const double t = detail::uniform(rng, 1.0, 2.0);
  Vec sigma(m), nu = Vec::Zero(m);
  for (int i = 0; i < m; ++i) sigma(i) = i < s ? t : t * detail::uniform(rng, 0.1, 0.8);
  std::sort(sigma.data(), sigma.data() + m, std::greater<>());
  for (int i = 0; i < s; ++i) nu(i) = detail::uniform(rng, 0.5, 1.5);
  if (!strictly_complementary) nu(s - 1) = 0.0;
  const Point xs = Point::scalar_matrix(t, svd_compose(u, sigma, v));
  const Point ys = Point::scalar_matrix(nu.sum(), -svd_compose(u, nu, v));
  const Mat mm = detail::monotone_matrix(rng, xs.dim(), 1.0);
  return detail::finish_affine(man, mm, xs, ys);
}

/// VI over the nuclear-norm epigraph. x* = (sum sigma, U diag(sigma) V^T) of
/// rank r; y* = (c, -c U diag(tau) V^T) with tau = 1 on the rank directions and
/// tau < 1 elsewhere (one extra tau = 1 when degenerate).
inline ProblemManifest generate_nuclear_vi(int m, int n, bool strictly_complementary, std::uint64_t seed) {
  require(m >= 2 && m <= n, "generate_nuclear_vi: 2 <= m <= n");
  std::mt19937_64 rng(seed);
  ProblemManifest man;
  man.name = "nuclear_" + std::to_string(m) + "x" + std::to_string(n) +
             (strictly_complementary ? "_strict" : "_degenerate");
  man.seed = seed;
  man.set.kind = SetKind::NuclearEpigraph;
  man.set.m = m;
  man.set.n = n;
  const Mat u = detail::random_orthogonal(rng, m);
  const Mat v = detail::random_orthogonal(rng, n);
  const int r = std::max(1, m / 2);
  Vec sigma = Vec::Zero(m), tau = Vec::Zero(m);
  for (int i = 0; i < r; ++i) sigma(i) = detail::uniform(rng, 0.5, 2.0);
  for (int i = 0; i < m; ++i) tau(i) = i < r ? 1.0 : detail::uniform(rng, 0.1, 0.7);
  if (!strictly_complementary) tau(r) = 1.0;
  const double c = detail::uniform(rng, 0.5, 1.5);
  const Point xs = Point::scalar_matrix(sigma.sum(), svd_compose(u, sigma, v));
  const Point ys = Point::scalar_matrix(c, -c * svd_compose(u, tau, v));
  const Mat mm = detail::monotone_matrix(rng, xs.dim(), 1.0);
  return detail::finish_affine(man, mm, xs, ys);
}

/// Replaces the affine map of a planted manifest by M x + q + scale * grad g(x)
/// and re-solves q so that the planted pair is kept.
inline ProblemManifest with_nonlinear_map(ProblemManifest man, MapType type, double scale) {
  require(man.planted_x && man.planted_y, "with_nonlinear_map: planted solution required");
  man.map.type = type;
  man.map.scale = scale;
  const VIProblem p = build_problem(man);
  const Point shape = p.set->shape();
  const Vec fx = to_flat(p.map.eval(from_flat(shape, *man.planted_x)));
  man.map.q += *man.planted_y - fx;
  return man;
}

}  // namespace ncvi
