#pragma once

#include <utility>
#include <vector>

#include "stk/quadrature.hpp"
#include "stk/splines.hpp"
#include "stk/types.hpp"

namespace stk {

/// Uniform temporal grid with N_t elements on (0, T).
struct TimeGrid {
  int nt;
  double T;

  TimeGrid(int nt_, double T_) : nt(nt_), T(T_) {
    if (nt < 1) throw ArgumentError("TimeGrid: nt must be >= 1");
    if (!(T > 0)) throw ArgumentError("TimeGrid: T must be positive");
  }

  double dt() const { return T / nt; }
  double node(int k) const { return k * dt(); }  // t^k, k = 0..nt
};

/// 1D spatial interval (a, b) carrying the number of active
/// (boundary-condition-satisfying) basis functions.
struct SpaceGrid1D {
  double a, b;
  int nh;

  SpaceGrid1D(double a_, double b_, int nh_) : a(a_), b(b_), nh(nh_) {
    if (!(b > a)) throw ArgumentError("SpaceGrid1D: empty interval");
    if (nh < 1) throw ArgumentError("SpaceGrid1D: nh must be >= 1");
  }

  /// Mesh width of the linear hat basis (nh interior nodes, nh+1 elements).
  double fem_h() const { return (b - a) / (nh + 1); }
};

/// Temporal matrices of the heat discretization: hats against indicators.
/// D[k,l] = (sigma_dot^k, tau^l), C[k,l] = (sigma^k, tau^l); both upper
/// bidiagonal, row N_t truncated at T.
inline std::pair<SparseMat, SparseMat> heat_time_matrices(const TimeGrid& grid) {
  const int n = grid.nt;
  const double dt = grid.dt();
  std::vector<Triplet> dtrips, ctrips;
  for (int k = 0; k < n; ++k) {
    dtrips.emplace_back(k, k, 1.0);
    ctrips.emplace_back(k, k, dt / 2.0);
    if (k + 1 < n) {
      dtrips.emplace_back(k, k + 1, -1.0);
      ctrips.emplace_back(k, k + 1, dt / 2.0);
    }
  }
  return {SparseMat::from_triplets(n, n, dtrips), SparseMat::from_triplets(n, n, ctrips)};
}

/// Linear finite elements on interior nodes (homogeneous Dirichlet):
/// mass and stiffness matrices of -Laplace on (a, b).
inline std::pair<SparseMat, SparseMat> fem1d_matrices(const SpaceGrid1D& grid) {
  const int n = grid.nh;
  const double h = grid.fem_h();
  std::vector<Triplet> mtrips, atrips;
  for (int i = 0; i < n; ++i) {
    mtrips.emplace_back(i, i, 2.0 * h / 3.0);
    atrips.emplace_back(i, i, 2.0 / h);
    if (i + 1 < n) {
      mtrips.emplace_back(i, i + 1, h / 6.0);
      mtrips.emplace_back(i + 1, i, h / 6.0);
      atrips.emplace_back(i, i + 1, -1.0 / h);
      atrips.emplace_back(i + 1, i, -1.0 / h);
    }
  }
  return {SparseMat::from_triplets(n, n, mtrips, true),
          SparseMat::from_triplets(n, n, atrips, true)};
}

/// Bilinear elements on a tensor grid: M = Mx (x) My, A = Ax (x) My + Mx (x) Ay,
/// materialized sparse.
inline std::pair<SparseMat, SparseMat> fem2d_matrices(const SpaceGrid1D& grid_x,
                                                      const SpaceGrid1D& grid_y) {
  auto [mx, ax] = fem1d_matrices(grid_x);
  auto [my, ay] = fem1d_matrices(grid_y);
  SparseMat m = sparse_kron(mx, my);
  SparseMat::Storage a = sparse_kron(ax, my).data() + sparse_kron(mx, ay).data();
  return {std::move(m), SparseMat(std::move(a), true)};
}

/// Temporal test basis for the wave problem: splines with
/// rho(T) = rho_dot(T) = 0.
inline SplineBasis wave_time_basis(const TimeGrid& grid, int degree = 3) {
  return SplineBasis(degree, grid.nt, 0.0, grid.T,
                     SplineBasis::EndConditions::zero_value_slope_right);
}

/// Spatial spline basis for the wave problem with grid.nh active functions
/// vanishing at both ends.
inline SplineBasis wave_space_basis(const SpaceGrid1D& grid, int degree = 3) {
  const int n_elems = grid.nh + 2 - degree;
  if (n_elems < 1) throw ArgumentError("wave_space_basis: nh too small for degree");
  return SplineBasis(degree, n_elems, grid.a, grid.b,
                     SplineBasis::EndConditions::zero_value_both);
}

namespace detail {

/// Gram-type matrix (d_row-th derivative against d_col-th derivative) of a
/// spline basis by per-element Gauss quadrature exact for the polynomial
/// degree.
inline SparseMat spline_gram(const SplineBasis& basis, int d_row, int d_col) {
  const int n = basis.num_active();
  const QuadRule ref = gauss_legendre(basis.degree() + 1, 0.0, 1.0);
  std::vector<Triplet> trips;
  for (int e = 0; e < basis.num_elems(); ++e) {
    const auto funcs = basis.active_on_element(e);
    const double xl = basis.elem_left(e), xr = basis.elem_right(e);
    for (size_t qi = 0; qi < ref.nodes.size(); ++qi) {
      const double x = xl + (xr - xl) * ref.nodes[qi];
      const double w = (xr - xl) * ref.weights[qi];
      for (const auto& [ja, ia] : funcs) {
        const double vi = basis.eval_full(ia, x, d_row);
        for (const auto& [jb, ib] : funcs) {
          const double vj = basis.eval_full(ib, x, d_col);
          trips.emplace_back(ja, jb, w * vi * vj);
        }
      }
    }
  }
  return SparseMat::from_triplets(n, n, trips, d_row == d_col);
}

}  // namespace detail

struct WaveTimeMatrices {
  SparseMat Q;  // (rho_ddot^k, rho_ddot^l)
  SparseMat D;  // (rho_ddot^k, rho^l)
  SparseMat M;  // (rho^k, rho^l)
};

inline WaveTimeMatrices wave_time_matrices(const SplineBasis& basis) {
  if (basis.end_conditions() != SplineBasis::EndConditions::zero_value_slope_right)
    throw ArgumentError("wave_time_matrices: basis must carry the right-end conditions");
  return {detail::spline_gram(basis, 2, 2), detail::spline_gram(basis, 2, 0),
          detail::spline_gram(basis, 0, 0)};
}

struct WaveSpaceMatrices {
  SparseMat M;  // (psi_i, psi_j)
  SparseMat A;  // (psi_i', psi_j')
  SparseMat Q;  // (psi_i'', psi_j'')
};

inline WaveSpaceMatrices wave_space_matrices(const SplineBasis& basis) {
  if (basis.degree() < 2)
    throw ArgumentError("wave_space_matrices: degree >= 2 required");
  if (basis.end_conditions() != SplineBasis::EndConditions::zero_value_both)
    throw ArgumentError("wave_space_matrices: basis must vanish at both ends");
  return {detail::spline_gram(basis, 0, 0), detail::spline_gram(basis, 1, 1),
          detail::spline_gram(basis, 2, 2)};
}

}  // namespace stk
