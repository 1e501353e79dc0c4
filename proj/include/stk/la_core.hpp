#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>

#include "stk/types.hpp"

namespace stk {

/// Sparse Cholesky factorization of an s.p.d. matrix, reusable across
/// right-hand sides.
class SpdFactor {
 public:
  explicit SpdFactor(const SparseMat& m) : n_(m.rows()) {
    if (m.rows() != m.cols()) throw ArgumentError("SpdFactor: matrix not square");
    llt_.compute(m.data());
    if (llt_.info() != Eigen::Success)
      throw DefinitenessError("SpdFactor: Cholesky failed, matrix is not s.p.d.");
  }

  Index size() const { return n_; }

  DenseMat solve(const DenseMat& b) const {
    if (b.rows() != n_) throw ArgumentError("SpdFactor::solve: row count mismatch");
    return llt_.solve(b);
  }

  Vector solve(const Vector& b) const {
    if (b.size() != n_) throw ArgumentError("SpdFactor::solve: size mismatch");
    return llt_.solve(b);
  }

 private:
  Eigen::SimplicialLLT<SparseMat::Storage> llt_;
  Index n_ = 0;
};

inline DenseMat spd_solve(const SparseMat& m, const DenseMat& b) {
  return SpdFactor(m).solve(b);
}

namespace detail {

inline void require_symmetric(const DenseMat& a, const char* who) {
  double asym = (a - a.transpose()).norm();
  double scale = a.norm();
  if (asym > 1e-12 * (scale > 0 ? scale : 1.0))
    throw ArgumentError(std::string(who) + ": matrix is not symmetric");
}

}  // namespace detail

/// Generalized eigendecomposition of the symmetric-definite pencil (Q, M):
/// Cholesky M = L L^T, symmetric eigendecomposition of L^-1 Q L^-T,
/// back-transform X = L^-T * eigenvectors. Eigenvalues ascending,
/// X^T M X = I.
inline EigPair sym_gen_eig(const DenseMat& q, const DenseMat& m) {
  if (q.rows() != q.cols() || m.rows() != m.cols() || q.rows() != m.rows())
    throw ArgumentError("sym_gen_eig: size mismatch");
  detail::require_symmetric(q, "sym_gen_eig(Q)");
  detail::require_symmetric(m, "sym_gen_eig(M)");

  Eigen::LLT<DenseMat> llt(m);
  if (llt.info() != Eigen::Success)
    throw DefinitenessError("sym_gen_eig: M is not s.p.d.");
  const auto& L = llt.matrixL();

  DenseMat b = L.solve(q);
  b = L.solve(b.transpose()).eval();  // L^-1 Q L^-T, symmetric
  b = 0.5 * (b + b.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<DenseMat> es(b);
  if (es.info() != Eigen::Success)
    throw NumericError("sym_gen_eig: eigendecomposition did not converge");

  EigPair out;
  out.lambdas = es.eigenvalues();
  out.X = llt.matrixU().solve(es.eigenvectors());
  return out;
}

inline EigPair sym_gen_eig(const SparseMat& q, const SparseMat& m) {
  return sym_gen_eig(q.dense(), m.dense());
}

namespace detail {

struct ThinQR {
  DenseMat Q;  // n x k, orthonormal columns (k = min(n, r))
  DenseMat R;  // k x r
};

inline ThinQR thin_qr(const DenseMat& a) {
  const Index n = a.rows(), r = a.cols();
  const Index k = std::min(n, r);
  Eigen::HouseholderQR<DenseMat> qr(a);
  ThinQR out;
  out.Q = qr.householderQ() * DenseMat::Identity(n, k);
  out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return out;
}

}  // namespace detail

/// Frobenius norm of left*right^T without forming the product:
/// thin QR of both factors, norm of the small core R1 R2^T.
inline double lowrank_norm(const LowRank& l) {
  if (l.rank() == 0) return 0.0;
  auto q1 = detail::thin_qr(l.left);
  auto q2 = detail::thin_qr(l.right);
  return (q1.R * q2.R.transpose()).norm();
}

/// Frobenius inner product <X, Y> computed from the factors.
inline double lowrank_dot(const LowRank& x, const LowRank& y) {
  if (x.rank() == 0 || y.rank() == 0) return 0.0;
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ArgumentError("lowrank_dot: shape mismatch");
  return ((x.left.transpose() * y.left).array() *
          (x.right.transpose() * y.right).array())
      .sum();
}

/// Recompress to the minimal rank r' with ||L - L'||_F <= tol * ||L||_F:
/// thin QR of both factors, SVD of the core, drop the trailing singular
/// values whose root-sum-square stays within the bound.
inline LowRank lowrank_truncate(const LowRank& l, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ArgumentError("lowrank_truncate: tol must be in (0,1)");
  if (l.rank() == 0) return l;

  auto q1 = detail::thin_qr(l.left);
  auto q2 = detail::thin_qr(l.right);
  DenseMat core = q1.R * q2.R.transpose();
  Eigen::JacobiSVD<DenseMat> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();

  const double total2 = sv.squaredNorm();
  if (total2 == 0.0) return LowRank::zero(l.rows(), l.cols());
  const double budget2 = tol * tol * total2;

  Index keep = sv.size();
  double tail2 = 0.0;
  while (keep > 0) {
    double next = tail2 + sv[keep - 1] * sv[keep - 1];
    if (next > budget2) break;
    tail2 = next;
    --keep;
  }
  if (keep == 0) return LowRank::zero(l.rows(), l.cols());

  LowRank out;
  out.left = q1.Q * svd.matrixU().leftCols(keep) * sv.head(keep).asDiagonal();
  out.right = q2.Q * svd.matrixV().leftCols(keep);
  return out;
}

}  // namespace stk
