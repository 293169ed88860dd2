#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "ncvi/space.hpp"

namespace ncvi {

// Matrix Market reader for real/integer matrices, coordinate or array form,
// general or symmetric. Vectors are n x 1 matrices.
inline Mat read_matrix_market(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError(name + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) fail("empty input");
  ++lineno;
  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") fail("missing %%MatrixMarket matrix banner");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") fail("unknown format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double") fail("unsupported field '" + field + "'");
  const bool sym = symmetry == "symmetric";
  if (!sym && symmetry != "general") fail("unsupported symmetry '" + symmetry + "'");

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sz(line);
  long rows = 0, cols = 0, nnz = 0;
  if (format == "coordinate") {
    if (!(sz >> rows >> cols >> nnz)) fail("bad size line");
  } else {
    if (!(sz >> rows >> cols)) fail("bad size line");
  }
  if (rows < 0 || cols < 0) fail("negative dimension");
  Mat a = Mat::Zero(rows, cols);

  auto next_data = [&](std::istringstream& ls) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '%') continue;
      ls.clear();
      ls.str(line);
      return true;
    }
    return false;
  };

  std::istringstream ls;
  if (format == "coordinate") {
    for (long k = 0; k < nnz; ++k) {
      if (!next_data(ls)) fail("unexpected end of file");
      long i = 0, j = 0;
      double v = 0;
      if (!(ls >> i >> j >> v)) fail("bad entry");
      if (i < 1 || i > rows || j < 1 || j > cols) fail("index out of range");
      a(i - 1, j - 1) = v;
      if (sym) a(j - 1, i - 1) = v;
    }
  } else {
    for (long j = 0; j < cols; ++j)
      for (long i = sym ? j : 0; i < rows; ++i) {
        if (!next_data(ls)) fail("unexpected end of file");
        double v = 0;
        if (!(ls >> v)) fail("bad entry");
        a(i, j) = v;
        if (sym) a(j, i) = v;
      }
  }
  return a;
}

inline Mat read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  return read_matrix_market(in, path);
}

/// Writes the array (dense, column-major) form with round-trip precision.
inline void write_matrix_market(std::ostream& out, const Mat& a) {
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << " " << a.cols() << "\n";
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << a(i, j) << "\n";
}

inline void write_matrix_market(const std::string& path, const Mat& a) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  write_matrix_market(out, a);
}

}  // namespace ncvi
