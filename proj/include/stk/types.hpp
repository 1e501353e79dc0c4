#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stk/errors.hpp"

namespace stk {

using DenseMat = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Triplet = Eigen::Triplet<double>;

/// Compressed sparse matrix with a symmetry flag. Symmetric matrices are
/// stored fully mirrored so Eigen products apply directly.
class SparseMat {
 public:
  using Storage = Eigen::SparseMatrix<double>;

  SparseMat() = default;

  SparseMat(Storage mat, bool symmetric = false)
      : mat_(std::move(mat)), symmetric_(symmetric) {
    mat_.makeCompressed();
    if (symmetric_) check_mirrored();
  }

  static SparseMat from_triplets(Index rows, Index cols,
                                 const std::vector<Triplet>& trips,
                                 bool symmetric = false) {
    for (const auto& t : trips) {
      if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= cols)
        throw ArgumentError("SparseMat: triplet index out of range");
    }
    Storage m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return SparseMat(std::move(m), symmetric);
  }

  static SparseMat identity(Index n) {
    Storage m(n, n);
    m.setIdentity();
    return SparseMat(std::move(m), true);
  }

  static SparseMat diagonal(const Vector& d) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(d.size()));
    for (Index i = 0; i < d.size(); ++i) trips.emplace_back(i, i, d[i]);
    return from_triplets(d.size(), d.size(), trips, true);
  }

  Index rows() const { return mat_.rows(); }
  Index cols() const { return mat_.cols(); }
  Index nonzeros() const { return mat_.nonZeros(); }
  bool symmetric() const { return symmetric_; }

  const Storage& data() const { return mat_; }
  DenseMat dense() const { return DenseMat(mat_); }

  SparseMat transposed() const {
    return SparseMat(Storage(mat_.transpose()), symmetric_);
  }

 private:
  void check_mirrored() const {
    if (mat_.rows() != mat_.cols())
      throw ArgumentError("SparseMat: symmetric flag on a non-square matrix");
    Storage diff = Storage(mat_.transpose()) - mat_;
    for (Index k = 0; k < diff.outerSize(); ++k)
      for (Storage::InnerIterator it(diff, k); it; ++it)
        if (it.value() != 0.0)
          throw ArgumentError("SparseMat: symmetric flag set but entries are not mirrored");
  }

  Storage mat_;
  bool symmetric_ = false;
};

/// Rank-r factored matrix value left * right^T; r = 0 encodes the zero matrix.
struct LowRank {
  DenseMat left;   // n x r
  DenseMat right;  // m x r

  LowRank() = default;
  LowRank(DenseMat l, DenseMat r) : left(std::move(l)), right(std::move(r)) {
    if (left.cols() != right.cols())
      throw ArgumentError("LowRank: factor column counts differ");
  }

  static LowRank zero(Index n, Index m) {
    return LowRank(DenseMat::Zero(n, 0), DenseMat::Zero(m, 0));
  }

  Index rows() const { return left.rows(); }
  Index cols() const { return right.rows(); }
  Index rank() const { return left.cols(); }

  DenseMat dense() const { return left * right.transpose(); }

  LowRank scaled(double alpha) const { return LowRank(alpha * left, right); }
};

/// Concatenate factored values: represents X + Y without forming either.
inline LowRank lowrank_concat(const LowRank& x, const LowRank& y) {
  if (x.rank() == 0) return y;
  if (y.rank() == 0) return x;
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ArgumentError("lowrank_concat: shape mismatch");
  LowRank out;
  out.left.resize(x.rows(), x.rank() + y.rank());
  out.left << x.left, y.left;
  out.right.resize(x.cols(), x.rank() + y.rank());
  out.right << x.right, y.right;
  return out;
}

/// Generalized eigendecomposition of a symmetric-definite pencil (Q, M):
/// Q X = M X diag(lambdas) with X^T M X = I, lambdas ascending.
struct EigPair {
  Vector lambdas;
  DenseMat X;
};

inline SparseMat sparse_kron(const SparseMat& a, const SparseMat& b) {
  const auto& A = a.data();
  const auto& B = b.data();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(A.nonZeros()) * static_cast<size_t>(B.nonZeros()));
  for (Index ka = 0; ka < A.outerSize(); ++ka)
    for (SparseMat::Storage::InnerIterator ita(A, ka); ita; ++ita)
      for (Index kb = 0; kb < B.outerSize(); ++kb)
        for (SparseMat::Storage::InnerIterator itb(B, kb); itb; ++itb)
          trips.emplace_back(ita.row() * B.rows() + itb.row(),
                             ita.col() * B.cols() + itb.col(),
                             ita.value() * itb.value());
  return SparseMat::from_triplets(A.rows() * B.rows(), A.cols() * B.cols(), trips,
                                  a.symmetric() && b.symmetric());
}

}  // namespace stk
