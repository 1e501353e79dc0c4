#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "stk/la_core.hpp"
#include "stk/report.hpp"
#include "stk/sylvester.hpp"
#include "stk/types.hpp"

namespace stk {

/// Spectral interval of the s.p.d. pencil (A, M) by 30 power iterations for
/// the largest and 30 inverse iterations for the smallest generalized
/// eigenvalue, widened by the safety factors [1/2, 2].
inline std::pair<double, double> estimate_spectral_interval(const SparseMat& a,
                                                            const SparseMat& m) {
  const Index n = a.rows();
  SpdFactor mf(m), af(a);

  std::mt19937 gen(0x5eed);
  std::normal_distribution<double> dist;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = dist(gen);
  x.normalize();

  Vector y = x;
  double lam_max = 1.0;
  for (int it = 0; it < 30; ++it) {
    Vector z = mf.solve(Vector(a.data() * y));
    z.normalize();
    y = z;
  }
  lam_max = y.dot(a.data() * y) / y.dot(m.data() * y);

  y = x;
  double lam_min = lam_max;
  for (int it = 0; it < 30; ++it) {
    Vector z = af.solve(Vector(m.data() * y));
    z.normalize();
    y = z;
  }
  lam_min = y.dot(a.data() * y) / y.dot(m.data() * y);

  return {lam_min / 2.0, 2.0 * lam_max};
}

/// State of a rational Krylov space build; spaces are nested, previous
/// columns stay a prefix of V.
struct RKSMState {
  DenseMat V;                  // orthonormal basis, N_h x k_m
  std::vector<double> shifts;  // used poles sigma_s
  std::vector<double> ritz;    // eigenvalues of the pencil (H_A, H_M)
  double lam_min = 0.0;
  double lam_max = 0.0;
};

/// Greedy adaptive pole: over a fixed candidate set of 200 log-spaced
/// points in [-2 lam_max, -lam_min/2], maximize the rational misfit
/// prod_s |x - sigma_s| / prod_j |x + lambda_j^ritz| (computed in log
/// space); ties break toward the smallest |sigma|.
inline double adaptive_next_shift(const RKSMState& state,
                                  const std::vector<double>* candidates = nullptr) {
  std::vector<double> cand;
  if (candidates) {
    cand = *candidates;
  } else {
    const int n = 200;
    const double lo = std::log(state.lam_min / 2.0), hi = std::log(2.0 * state.lam_max);
    for (int i = 0; i < n; ++i)
      cand.push_back(-std::exp(lo + (hi - lo) * i / (n - 1)));
  }
  if (cand.empty()) throw NumericError("adaptive_next_shift: empty candidate set");

  double best = cand.front();
  double best_val = -std::numeric_limits<double>::infinity();
  for (double x : cand) {
    double val = 0.0;
    for (double s : state.shifts) {
      const double d = std::abs(x - s);
      if (d == 0.0) {
        val = -std::numeric_limits<double>::infinity();
        break;
      }
      val += std::log(d);
    }
    for (double lam : state.ritz) {
      const double d = std::abs(x + lam);
      val -= std::log(std::max(d, 1e-300));
    }
    if (val > best_val || (val == best_val && std::abs(x) < std::abs(best))) {
      best_val = val;
      best = x;
    }
  }
  return best;
}

struct RksmOptions {
  double tol = 1e-8;
  int maxit = 100;
  std::optional<int> fixed_iters;  // preconditioner mode: run exactly this
                                   // many expansions, no stopping test
  double trunc_tol = 1e-10;
  // reuse across solves (preconditioner mode); both optional
  std::shared_ptr<std::map<double, SpdFactor>> factor_cache;
  std::optional<std::pair<double, double>> spectral_interval;
};

struct RksmResult {
  LowRank U;
  SolveReport report;
  RKSMState state;
};

/// Rational Krylov Galerkin solver for M_h U D + A_h U C = F.
///
/// Each iteration orthonormalizes one new block (A_h - sigma M_h)^{-1} M_h
/// applied to the newest block (the first block is orth(F1)), solves the
/// projected equation, and evaluates the factored residual. Iterations are
/// counted per space expansion including the initial block.
inline RksmResult rksm_solve(const SparseMat& m_h, const SparseMat& a_h, const SparseMat& d,
                             const SparseMat& c, const LowRank& f,
                             const RksmOptions& opts = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  const Index n = m_h.rows(), nt = d.rows();
  if (f.rows() != n || f.cols() != nt) throw ArgumentError("rksm_solve: F shape mismatch");
  if (opts.fixed_iters && *opts.fixed_iters < 1)
    throw ArgumentError("rksm_solve: fixed_iters must be >= 1");

  RksmResult res;
  const KronOp op = heat_kron_op(m_h, a_h, d, c);
  const double norm_f = lowrank_norm(f);
  if (norm_f == 0.0) {
    res.U = LowRank::zero(n, nt);
    res.report.converged = true;
    return res;
  }

  // full-column-rank left factor via rank-revealing QR
  Eigen::ColPivHouseholderQR<DenseMat> qr(f.left);
  qr.setThreshold(1e-13);
  const Index rf = std::max<Index>(qr.rank(), 1);
  DenseMat f1 = qr.householderQ() * DenseMat::Identity(n, rf);
  DenseMat r_thin = qr.matrixR().topRows(rf).triangularView<Eigen::Upper>();
  DenseMat f2 = f.right * (qr.colsPermutation() * r_thin.transpose());

  auto interval = opts.spectral_interval ? *opts.spectral_interval
                                         : estimate_spectral_interval(a_h, m_h);
  RKSMState& state = res.state;
  state.lam_min = interval.first;
  state.lam_max = interval.second;
  state.V = f1;

  auto cache = opts.factor_cache ? opts.factor_cache
                                 : std::make_shared<std::map<double, SpdFactor>>();
  auto shifted_factor = [&](double sigma) -> const SpdFactor& {
    auto it = cache->find(sigma);
    if (it == cache->end()) {
      SparseMat shifted(SparseMat::Storage(a_h.data() - sigma * m_h.data()), true);
      it = cache->emplace(sigma, SpdFactor(shifted)).first;
    }
    return it->second;
  };

  SolveReport& rep = res.report;
  DenseMat newest = f1;
  DenseMat y;
  const int total_iters = opts.fixed_iters ? *opts.fixed_iters : opts.maxit;

  for (int it = 1; it <= total_iters; ++it) {
    rep.iterations = it;
    const Index k = state.V.cols();

    DenseMat h_m = state.V.transpose() * (m_h.data() * state.V);
    DenseMat h_a = state.V.transpose() * (a_h.data() * state.V);
    h_m = 0.5 * (h_m + h_m.transpose()).eval();
    h_a = 0.5 * (h_a + h_a.transpose()).eval();
    EigPair eig = sym_gen_eig(h_a, h_m);
    state.ritz.assign(eig.lambdas.data(), eig.lambdas.data() + eig.lambdas.size());

    DenseMat g = (state.V.transpose() * f1) * f2.transpose();
    y = solve_projected_heat_with(eig, d, c, g);

    LowRank u_m(state.V, y.transpose());
    const double relres = residual_norm_factored(op, u_m, f) / norm_f;
    rep.rel_res_history.push_back(relres);

    const int nh_cols = static_cast<int>(k + rf);
    const int nt_cols = static_cast<int>(k + rf);
    rep.mu_mem = std::max(rep.mu_mem, std::max(nh_cols, nt_cols));

    if (!opts.fixed_iters && relres <= opts.tol) {
      rep.converged = true;
      break;
    }
    if (it == total_iters) {
      rep.converged = opts.fixed_iters.has_value() || relres <= opts.tol;
      break;
    }

    const double sigma =
        state.shifts.empty() ? -state.lam_max : adaptive_next_shift(state);
    state.shifts.push_back(sigma);

    DenseMat w = shifted_factor(sigma).solve(DenseMat(m_h.data() * newest));
    // block modified Gram-Schmidt, one reorthogonalization pass
    for (int pass = 0; pass < 2; ++pass) w -= state.V * (state.V.transpose() * w);
    Eigen::ColPivHouseholderQR<DenseMat> wqr(w);
    wqr.setThreshold(1e-12);
    const Index add = wqr.rank();
    if (add == 0) {
      rep.converged = !opts.fixed_iters && rep.rel_res_history.back() <= opts.tol;
      break;  // space exhausted
    }
    DenseMat wq = wqr.householderQ() * DenseMat::Identity(n, add);
    state.V.conservativeResize(Eigen::NoChange, state.V.cols() + add);
    state.V.rightCols(add) = wq;
    newest = wq;
  }

  const double final_tol = opts.fixed_iters ? opts.trunc_tol : opts.tol;
  res.U = lowrank_truncate(LowRank(state.V, y.transpose()), final_tol);
  rep.rank = static_cast<int>(res.U.rank());
  rep.final_relres = rep.rel_res_history.empty() ? 0.0 : rep.rel_res_history.back();
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

}  // namespace stk
