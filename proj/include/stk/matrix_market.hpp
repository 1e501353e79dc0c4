#pragma once

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stk/types.hpp"

namespace stk {

/// Coordinate text format, 1-based indices. Symmetric matrices store the
/// lower triangle only.
inline void write_matrix_market(std::ostream& os, const SparseMat& m) {
  os << "%%MatrixMarket matrix coordinate real "
     << (m.symmetric() ? "symmetric" : "general") << "\n";
  std::vector<Triplet> entries;
  const auto& s = m.data();
  for (Index k = 0; k < s.outerSize(); ++k)
    for (SparseMat::Storage::InnerIterator it(s, k); it; ++it) {
      if (m.symmetric() && it.row() < it.col()) continue;
      entries.emplace_back(it.row(), it.col(), it.value());
    }
  os << m.rows() << " " << m.cols() << " " << entries.size() << "\n";
  os << std::setprecision(17);
  for (const auto& t : entries)
    os << t.row() + 1 << " " << t.col() + 1 << " " << t.value() << "\n";
}

inline void write_matrix_market(const std::string& path, const SparseMat& m) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("write_matrix_market: cannot open " + path);
  write_matrix_market(os, m);
}

inline SparseMat read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw ArgumentError("read_matrix_market: empty input");
  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
      field != "real" || (symmetry != "general" && symmetry != "symmetric"))
    throw ArgumentError("read_matrix_market: unsupported header: " + line);
  const bool symmetric = symmetry == "symmetric";

  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  Index rows = 0, cols = 0, nnz = 0;
  if (!(sizes >> rows >> cols >> nnz))
    throw ArgumentError("read_matrix_market: bad size line");

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
  std::set<std::pair<Index, Index>> seen;
  for (Index k = 0; k < nnz; ++k) {
    Index i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v))
      throw ArgumentError("read_matrix_market: truncated entry list");
    --i;
    --j;
    if (!seen.insert({i, j}).second)
      throw ArgumentError("read_matrix_market: duplicate entry");
    trips.emplace_back(i, j, v);
    if (symmetric && i != j) trips.emplace_back(j, i, v);
  }
  return SparseMat::from_triplets(rows, cols, trips, symmetric);
}

inline SparseMat read_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("read_matrix_market: cannot open " + path);
  return read_matrix_market(is);
}

}  // namespace stk
