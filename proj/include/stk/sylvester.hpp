#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stk/la_core.hpp"
#include "stk/types.hpp"

namespace stk {

/// The operator sum_p A_p X D_p^T held as term pairs; never materialized.
struct KronOp {
  struct Term {
    SparseMat A;  // spatial, N_h x N_h
    SparseMat D;  // temporal, N_t x N_t
  };

  std::vector<Term> terms;

  Index rows() const { return terms.empty() ? 0 : terms.front().A.rows(); }
  Index cols() const { return terms.empty() ? 0 : terms.front().D.rows(); }

  void check_shapes() const {
    for (const auto& t : terms)
      if (t.A.rows() != rows() || t.A.cols() != rows() || t.D.rows() != cols() ||
          t.D.cols() != cols())
        throw ArgumentError("KronOp: term shapes are inconsistent");
  }

  DenseMat apply(const DenseMat& x) const {
    if (x.rows() != rows() || x.cols() != cols())
      throw ArgumentError("KronOp::apply: shape mismatch");
    DenseMat out = DenseMat::Zero(x.rows(), x.cols());
    for (const auto& t : terms) out += t.A.data() * x * t.D.data().transpose();
    return out;
  }

  /// Factored apply: concatenate per-term factors, then recompress.
  LowRank apply(const LowRank& x, double trunc_tol = 1e-10) const {
    if (x.rows() != rows() || x.cols() != cols())
      throw ArgumentError("KronOp::apply: shape mismatch");
    if (x.rank() == 0) return x;
    const Index r = x.rank(), p = static_cast<Index>(terms.size());
    LowRank out;
    out.left.resize(rows(), p * r);
    out.right.resize(cols(), p * r);
    for (Index i = 0; i < p; ++i) {
      out.left.middleCols(i * r, r) = terms[i].A.data() * x.left;
      out.right.middleCols(i * r, r) = terms[i].D.data() * x.right;
    }
    return lowrank_truncate(out, trunc_tol);
  }
};

/// Heat operator X -> M_h X D + A_h X C as a KronOp.
inline KronOp heat_kron_op(const SparseMat& m_h, const SparseMat& a_h, const SparseMat& d,
                           const SparseMat& c) {
  KronOp op;
  op.terms.push_back({m_h, d.transposed()});
  op.terms.push_back({a_h, c.transposed()});
  op.check_shapes();
  return op;
}

/// ||F - sum_p A_p U D_p^T||_F via stacked factors and thin QR; no
/// N_h x N_t dense matrix is formed.
inline double residual_norm_factored(const KronOp& op, const LowRank& u, const LowRank& f) {
  if (u.rows() != op.rows() || u.cols() != op.cols() || f.rows() != op.rows() ||
      f.cols() != op.cols())
    throw ArgumentError("residual_norm_factored: shape mismatch");
  const Index p = static_cast<Index>(op.terms.size());
  const Index r = u.rank(), rf = f.rank();
  LowRank stack;
  stack.left.resize(op.rows(), rf + p * r);
  stack.right.resize(op.cols(), rf + p * r);
  stack.left.leftCols(rf) = f.left;
  stack.right.leftCols(rf) = f.right;
  for (Index i = 0; i < p; ++i) {
    stack.left.middleCols(rf + i * r, r) = op.terms[i].A.data() * u.left;
    stack.right.middleCols(rf + i * r, r) = -(op.terms[i].D.data() * u.right);
  }
  return lowrank_norm(stack);
}

namespace detail {

struct Bidiagonal {
  Vector diag;
  Vector super;  // length n-1
};

inline Bidiagonal extract_upper_bidiagonal(const SparseMat& m, const char* who) {
  const Index n = m.rows();
  if (m.cols() != n) throw ArgumentError(std::string(who) + ": matrix not square");
  Bidiagonal b{Vector::Zero(n), Vector::Zero(n > 0 ? n - 1 : 0)};
  const auto& s = m.data();
  for (Index k = 0; k < s.outerSize(); ++k)
    for (SparseMat::Storage::InnerIterator it(s, k); it; ++it) {
      if (it.col() == it.row())
        b.diag[it.row()] = it.value();
      else if (it.col() == it.row() + 1)
        b.super[it.row()] = it.value();
      else if (it.value() != 0.0)
        throw ArgumentError(std::string(who) + ": matrix is not upper bidiagonal");
    }
  return b;
}

}  // namespace detail

/// Small projected generalized Sylvester equation of the heat problem:
/// H_M Y D + H_A Y C = G with H_M, H_A s.p.d. and D, C upper bidiagonal.
/// Diagonalize (H_A, H_M), then each row of the transformed unknown
/// solves a bidiagonal system (D + lambda_i C)^T y_i = g_i.
inline DenseMat solve_projected_heat_with(const EigPair& eig, const SparseMat& d,
                                          const SparseMat& c, const DenseMat& g) {
  const Index k = eig.X.rows(), nt = d.rows();
  if (g.rows() != k || g.cols() != nt)
    throw ArgumentError("solve_projected_heat: G shape mismatch");
  const auto db = detail::extract_upper_bidiagonal(d, "solve_projected_heat(D)");
  const auto cb = detail::extract_upper_bidiagonal(c, "solve_projected_heat(C)");

  // X^T G because X^T H_M X = I makes X^T the inverse of (H_M X).
  DenseMat gt = eig.X.transpose() * g;
  DenseMat yt(k, nt);
  for (Index i = 0; i < k; ++i) {
    const double lam = eig.lambdas[i];
    // forward substitution on the lower-bidiagonal transpose
    for (Index j = 0; j < nt; ++j) {
      const double piv = db.diag[j] + lam * cb.diag[j];
      if (std::abs(piv) < 1e-300)
        throw SingularityError("solve_projected_heat: singular row system at lambda = " +
                               std::to_string(lam));
      double rhs = gt(i, j);
      if (j > 0) rhs -= (db.super[j - 1] + lam * cb.super[j - 1]) * yt(i, j - 1);
      yt(i, j) = rhs / piv;
    }
  }
  return eig.X * yt;
}

inline DenseMat solve_projected_heat(const DenseMat& h_m, const DenseMat& h_a,
                                     const SparseMat& d, const SparseMat& c,
                                     const DenseMat& g) {
  return solve_projected_heat_with(sym_gen_eig(h_a, h_m), d, c, g);
}

/// Diagonalized two-term preconditioner of the wave problem:
/// W -> M_h W Q_dt^T + Q_h W M_dt, inverted through the generalized
/// eigendecompositions of (Q_h, M_h) and (Q_dt, M_dt).
class TwoTermPrecond {
 public:
  TwoTermPrecond(const SparseMat& m_h, const SparseMat& q_h, const SparseMat& m_dt,
                 const SparseMat& q_dt)
      : space_(sym_gen_eig(q_h, m_h)), time_(sym_gen_eig(q_dt, m_dt)) {
    const double worst = space_.lambdas.minCoeff() + time_.lambdas.minCoeff();
    if (!(worst > 0.0))
      throw SolvabilityError("TwoTermPrecond: lambda_i + theta_j <= 0, system not solvable");
  }

  const EigPair& space() const { return space_; }
  const EigPair& time() const { return time_; }

  /// Solve M_h W Q_dt^T + Q_h W M_dt = V: transform to the eigenbases,
  /// divide by lambda_i + theta_j, transform back.
  DenseMat solve(const DenseMat& v) const {
    if (v.rows() != space_.X.rows() || v.cols() != time_.X.rows())
      throw ArgumentError("TwoTermPrecond::solve: shape mismatch");
    DenseMat wt = space_.X.transpose() * v * time_.X;
    for (Index i = 0; i < wt.rows(); ++i)
      for (Index j = 0; j < wt.cols(); ++j)
        wt(i, j) /= space_.lambdas[i] + time_.lambdas[j];
    return space_.X * wt * time_.X.transpose();
  }

 private:
  EigPair space_;  // (Q_h, M_h)
  EigPair time_;   // (Q_dt, M_dt)
};

inline TwoTermPrecond build_two_term_precond(const SparseMat& m_h, const SparseMat& q_h,
                                             const SparseMat& m_dt, const SparseMat& q_dt) {
  return TwoTermPrecond(m_h, q_h, m_dt, q_dt);
}

inline DenseMat two_term_solve(const TwoTermPrecond& p, const DenseMat& v) {
  return p.solve(v);
}

}  // namespace stk
