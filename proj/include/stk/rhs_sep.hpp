#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "stk/discretize.hpp"
#include "stk/la_core.hpp"
#include "stk/quadrature.hpp"
#include "stk/types.hpp"

namespace stk {

using ScalarFn = std::function<double(double)>;

/// Separable approximation f(t,x) ~ sum_p theta_p(t) f_p(x).
struct SeparableRHS {
  struct Term {
    ScalarFn theta;
    ScalarFn f;
    int t_magic = -1;  // EIM magic point indices on the sample grid,
    int x_magic = -1;  // -1 for analytically separable terms
  };

  std::vector<Term> terms;
  double tol = 0.0;        // tolerance requested at construction
  double achieved = 0.0;   // max-norm reconstruction error on the sample grid
  bool truncated = false;  // P_max was hit before reaching tol

  int P() const { return static_cast<int>(terms.size()); }
};

/// Direct constructor for an analytically separable right-hand side.
inline SeparableRHS separable_rhs(std::vector<std::pair<ScalarFn, ScalarFn>> factors) {
  SeparableRHS rhs;
  for (auto& [theta, f] : factors) rhs.terms.push_back({std::move(theta), std::move(f), -1, -1});
  return rhs;
}

namespace detail {

/// Piecewise-linear interpolant of samples over an ascending grid,
/// clamped outside the range.
inline ScalarFn linear_interp(std::vector<double> grid, Vector values) {
  auto g = std::make_shared<std::vector<double>>(std::move(grid));
  auto v = std::make_shared<Vector>(std::move(values));
  return [g, v](double x) {
    const auto& t = *g;
    if (x <= t.front()) return (*v)[0];
    if (x >= t.back()) return (*v)[v->size() - 1];
    auto it = std::upper_bound(t.begin(), t.end(), x);
    const auto i = static_cast<Index>(it - t.begin()) - 1;
    const double w = (x - t[i]) / (t[i + 1] - t[i]);
    return (1.0 - w) * (*v)[i] + w * (*v)[i + 1];
  };
}

}  // namespace detail

/// Greedy empirical interpolation on a sample matrix (rows: t-grid,
/// columns: x-grid). At each step the entry of maximal absolute residual
/// becomes the next magic point; its row/column cross, scaled to
/// interpolate there exactly, is the next separable term. Stops when the
/// max-entry residual falls below tol * max|f| or after P_max terms.
inline SeparableRHS eim_separate(const std::vector<double>& t_grid,
                                 const std::vector<double>& x_grid,
                                 const DenseMat& f_samples, double tol, int P_max) {
  if (!(tol > 0.0)) throw ArgumentError("eim_separate: tol must be positive");
  if (P_max < 1) throw ArgumentError("eim_separate: P_max must be >= 1");
  if (f_samples.rows() != static_cast<Index>(t_grid.size()) ||
      f_samples.cols() != static_cast<Index>(x_grid.size()))
    throw ArgumentError("eim_separate: sample/grid shape mismatch");

  SeparableRHS rhs;
  rhs.tol = tol;
  DenseMat resid = f_samples;
  const double fmax = resid.cwiseAbs().maxCoeff();
  if (fmax == 0.0) return rhs;

  while (rhs.P() < P_max) {
    Index ti = 0, xi = 0;
    const double rmax = resid.cwiseAbs().maxCoeff(&ti, &xi);
    if (rmax <= tol * fmax) break;
    Vector u = resid.col(xi);
    Vector v = resid.row(ti).transpose() / resid(ti, xi);
    resid -= u * v.transpose();
    rhs.terms.push_back({detail::linear_interp(t_grid, std::move(u)),
                         detail::linear_interp(x_grid, std::move(v)),
                         static_cast<int>(ti), static_cast<int>(xi)});
  }
  rhs.achieved = resid.cwiseAbs().maxCoeff();
  rhs.truncated = rhs.achieved > tol * fmax;
  return rhs;
}

/// Factored right-hand side F = G H^T with G[j,p] the spatial and H[l,p]
/// the temporal projections.
struct RHSFactors {
  DenseMat G;  // N_h x P
  DenseMat H;  // N_t x P

  LowRank lowrank() const { return LowRank(G, H); }
};

/// Projection onto the heat test space: H[l,p] = integral of theta_p over
/// the l-th time slab, G[j,p] = (f_p, phi_j) against the hat basis.
/// Trapezoidal time mode replaces the slab integral by
/// (dt/2)(theta(t^{l-1}) + theta(t^l)), the quadrature under which the
/// discretization coincides with Crank-Nicolson stepping.
inline RHSFactors project_rhs_heat(const SeparableRHS& rhs, const TimeGrid& time,
                                   const SpaceGrid1D& space, bool trapezoidal_time = false,
                                   int npoints = 6) {
  const int p = rhs.P();
  RHSFactors out;
  out.H = DenseMat::Zero(time.nt, p);
  out.G = DenseMat::Zero(space.nh, p);

  const QuadRule ref = gauss_legendre(npoints, 0.0, 1.0);
  const double dt = time.dt();
  for (int q = 0; q < p; ++q) {
    const auto& theta = rhs.terms[q].theta;
    for (int l = 0; l < time.nt; ++l) {
      const double t0 = time.node(l), t1 = time.node(l + 1);
      if (trapezoidal_time) {
        out.H(l, q) = dt / 2.0 * (theta(t0) + theta(t1));
      } else {
        double acc = 0.0;
        for (size_t i = 0; i < ref.nodes.size(); ++i)
          acc += dt * ref.weights[i] * theta(t0 + dt * ref.nodes[i]);
        out.H(l, q) = acc;
      }
    }
  }

  const double h = space.fem_h();
  for (int q = 0; q < p; ++q) {
    const auto& f = rhs.terms[q].f;
    for (int e = 0; e <= space.nh; ++e) {
      const double x0 = space.a + e * h;
      for (size_t i = 0; i < ref.nodes.size(); ++i) {
        const double x = x0 + h * ref.nodes[i];
        const double w = h * ref.weights[i];
        const double up = (x - x0) / h;  // hat rising toward node e+1
        if (e + 1 <= space.nh) out.G(e, q) += w * f(x) * up;
        if (e >= 1) out.G(e - 1, q) += w * f(x) * (1.0 - up);
      }
    }
  }
  return out;
}

/// Projection onto the wave test space: spline test functions in both
/// variables, per-element Gauss quadrature.
inline RHSFactors project_rhs_wave(const SeparableRHS& rhs, const SplineBasis& time_basis,
                                   const SplineBasis& space_basis, int npoints = 0) {
  const int p = rhs.P();
  RHSFactors out;
  out.H = DenseMat::Zero(time_basis.num_active(), p);
  out.G = DenseMat::Zero(space_basis.num_active(), p);

  auto project = [&](const SplineBasis& basis, const ScalarFn& fn, DenseMat& target, int col) {
    const int nq = npoints > 0 ? npoints : basis.degree() + 4;
    const QuadRule ref = gauss_legendre(nq, 0.0, 1.0);
    for (int e = 0; e < basis.num_elems(); ++e) {
      const double xl = basis.elem_left(e), xr = basis.elem_right(e);
      const auto funcs = basis.active_on_element(e);
      for (size_t i = 0; i < ref.nodes.size(); ++i) {
        const double x = xl + (xr - xl) * ref.nodes[i];
        const double w = (xr - xl) * ref.weights[i];
        const double fv = fn(x);
        for (const auto& [ja, ia] : funcs)
          target(ja, col) += w * fv * basis.eval_full(ia, x, 0);
      }
    }
  };

  for (int q = 0; q < p; ++q) {
    project(time_basis, rhs.terms[q].theta, out.H, q);
    project(space_basis, rhs.terms[q].f, out.G, q);
  }
  return out;
}

}  // namespace stk
