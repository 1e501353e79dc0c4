#pragma once

#include <functional>
#include <ostream>

#include "stk/discretize.hpp"
#include "stk/la_core.hpp"
#include "stk/rhs_sep.hpp"
#include "stk/types.hpp"

namespace stk {

/// Full time-marching trajectory: one spatial coefficient column per time
/// node t^1..t^{N_t}.
struct Trajectory {
  DenseMat columns;  // N_h x N_t
  double dt = 0.0;
  int nt = 0;
};

/// Crank-Nicolson marching for M_h u_t + A_h u = f with u(0) = u0:
/// (M_h + dt/2 A_h) u^l = (M_h - dt/2 A_h) u^{l-1} + F_l. The system matrix
/// is factored once. F_l must be the trapezoidal-mode right-hand-side
/// column, under which the scheme coincides column-by-column with the
/// space-time heat discretization.
inline Trajectory crank_nicolson(const SparseMat& m_h, const SparseMat& a_h,
                                 const std::function<Vector(int)>& rhs_column,
                                 const TimeGrid& grid, const Vector& u0 = Vector()) {
  const Index n = m_h.rows();
  const double dt = grid.dt();
  SparseMat lhs(SparseMat::Storage(m_h.data() + (dt / 2.0) * a_h.data()), true);
  SparseMat::Storage rhs_mat = m_h.data() - (dt / 2.0) * a_h.data();
  SpdFactor factor(lhs);

  Trajectory traj;
  traj.columns.resize(n, grid.nt);
  traj.dt = dt;
  traj.nt = grid.nt;

  Vector u = u0.size() == 0 ? Vector(Vector::Zero(n)) : u0;
  if (u.size() != n) throw ArgumentError("crank_nicolson: u0 size mismatch");
  for (int l = 1; l <= grid.nt; ++l) {
    Vector b = rhs_mat * u + rhs_column(l);
    u = factor.solve(b);
    traj.columns.col(l - 1) = u;
  }
  return traj;
}

/// Column provider from factored right-hand side F = G H^T.
inline std::function<Vector(int)> rhs_columns_from_factors(const RHSFactors& f) {
  return [G = f.G, H = f.H](int l) { return Vector(G * H.row(l - 1).transpose()); };
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  for (Index i = 0; i < traj.columns.rows(); ++i) {
    for (Index j = 0; j < traj.columns.cols(); ++j) {
      if (j) os << ",";
      os << traj.columns(i, j);
    }
    os << "\n";
  }
}

}  // namespace stk
