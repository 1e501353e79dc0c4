#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "stk/la_core.hpp"
#include "stk/report.hpp"
#include "stk/rksm.hpp"
#include "stk/sylvester.hpp"
#include "stk/types.hpp"

namespace stk {

struct GmresConfig {
  double tol = 1e-8;
  int maxit = 200;
  int restart = 0;           // 0 = full GMRES
  double trunc_tol = 1e-10;  // recompression tolerance of the low-rank path

  void validate() const {
    if (!(tol > 0.0 && tol < 1.0)) throw ArgumentError("GmresConfig: tol must be in (0,1)");
    if (maxit < 1) throw ArgumentError("GmresConfig: maxit must be >= 1");
  }
};

using VecOp = std::function<Vector(const Vector&)>;

namespace detail {

struct Givens {
  std::vector<double> cs, sn;

  void apply_and_extend(std::vector<std::vector<double>>& h_cols, Vector& g, Index j) {
    auto& col = h_cols[static_cast<size_t>(j)];
    for (Index i = 0; i < j; ++i) {
      const double t = cs[i] * col[i] + sn[i] * col[i + 1];
      col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
      col[i] = t;
    }
    const double a = col[j], b = col[j + 1];
    const double r = std::hypot(a, b);
    const double c = r == 0.0 ? 1.0 : a / r;
    const double s = r == 0.0 ? 0.0 : b / r;
    cs.push_back(c);
    sn.push_back(s);
    col[j] = r;
    col[j + 1] = 0.0;
    const double t = c * g[j] + s * g[j + 1];
    g[j + 1] = -s * g[j] + c * g[j + 1];
    g[j] = t;
  }
};

inline Vector solve_hessenberg(const std::vector<std::vector<double>>& h_cols, const Vector& g,
                               Index k) {
  Vector y(k);
  for (Index i = k - 1; i >= 0; --i) {
    double acc = g[i];
    for (Index j = i + 1; j < k; ++j) acc -= h_cols[static_cast<size_t>(j)][i] * y[j];
    y[i] = acc / h_cols[static_cast<size_t>(i)][i];
  }
  return y;
}

}  // namespace detail

/// Right-preconditioned GMRES on flat vectors: Arnoldi with modified
/// Gram-Schmidt plus one reorthogonalization pass, Givens least squares.
/// With restart = 0 the full method runs and the residual history is
/// non-increasing.
inline std::pair<Vector, SolveReport> gmres(const VecOp& apply, const VecOp& precond,
                                            const Vector& b, const GmresConfig& cfg = {}) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  SolveReport rep;
  const double norm_b = b.norm();
  Vector x = Vector::Zero(b.size());
  if (norm_b == 0.0) {
    rep.converged = true;
    return {x, rep};
  }

  const int cycle = cfg.restart > 0 ? cfg.restart : cfg.maxit;
  int total = 0;
  int peak_vecs = 0;

  while (true) {
    Vector r = total == 0 ? b : Vector(b - apply(x));
    const double beta = r.norm();
    if (beta <= cfg.tol * norm_b) {
      rep.converged = true;
      break;
    }

    std::vector<Vector> basis{r / beta};
    std::vector<std::vector<double>> h_cols;
    Vector g = Vector::Zero(cycle + 1);
    g[0] = beta;
    detail::Givens rot;
    Index k = 0;
    bool done = false;

    for (Index j = 0; j < cycle && total < cfg.maxit; ++j, ++total) {
      Vector w = apply(precond ? precond(basis[static_cast<size_t>(j)])
                               : basis[static_cast<size_t>(j)]);
      std::vector<double> col(static_cast<size_t>(j) + 2, 0.0);
      for (Index i = 0; i <= j; ++i) {
        const double hij = basis[static_cast<size_t>(i)].dot(w);
        w -= hij * basis[static_cast<size_t>(i)];
        col[static_cast<size_t>(i)] = hij;
      }
      for (Index i = 0; i <= j; ++i) {  // reorthogonalization
        const double corr = basis[static_cast<size_t>(i)].dot(w);
        w -= corr * basis[static_cast<size_t>(i)];
        col[static_cast<size_t>(i)] += corr;
      }
      const double hlast = w.norm();
      col[static_cast<size_t>(j) + 1] = hlast;
      if (!std::isfinite(hlast) || !std::isfinite(col[static_cast<size_t>(j)]))
        throw NumericError("gmres: non-finite value at iteration " + std::to_string(total + 1));

      h_cols.push_back(std::move(col));
      rot.apply_and_extend(h_cols, g, j);
      const double relres = std::abs(g[j + 1]) / norm_b;
      rep.rel_res_history.push_back(relres);
      k = j + 1;
      peak_vecs = std::max(peak_vecs, static_cast<int>(basis.size()) + 1);

      if (relres <= cfg.tol) {
        rep.converged = true;
        done = true;
        ++total;
        break;
      }
      if (hlast == 0.0) {  // exact breakdown: solution is in the space
        rep.converged = true;
        done = true;
        ++total;
        break;
      }
      basis.push_back(w / hlast);
    }

    if (k > 0) {
      Vector y = detail::solve_hessenberg(h_cols, g, k);
      Vector xk = Vector::Zero(b.size());
      for (Index i = 0; i < k; ++i) xk += y[i] * basis[static_cast<size_t>(i)];
      x += precond ? precond(xk) : xk;
    }
    if (done || total >= cfg.maxit) break;
  }

  rep.iterations = total;
  rep.mu_mem = peak_vecs;  // stored full-length vectors; callers rescale
  rep.final_relres = (b - apply(x)).norm() / norm_b;
  if (rep.final_relres <= cfg.tol) rep.converged = true;
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {x, rep};
}

/// vec(M_h U Q_dt^T + A_h U (D_dt + D_dt^T) + Q_h U M_dt) on a flat
/// column-major vector; no Kronecker matrix is materialized.
class WaveOperator {
 public:
  WaveOperator(const SparseMat& m_h, const SparseMat& a_h, const SparseMat& q_h,
               const SparseMat& q_dt, const SparseMat& d_dt, const SparseMat& m_dt)
      : m_h_(m_h), a_h_(a_h), q_h_(q_h), q_dt_(q_dt), m_dt_(m_dt),
        e_dt_(d_dt.data() + SparseMat::Storage(d_dt.data().transpose())) {}

  Index space_dim() const { return m_h_.rows(); }
  Index time_dim() const { return q_dt_.rows(); }

  Vector apply(const Vector& x) const {
    const Index nh = space_dim(), nt = time_dim();
    if (x.size() != nh * nt) throw ArgumentError("WaveOperator: vector length mismatch");
    Eigen::Map<const DenseMat> u(x.data(), nh, nt);
    DenseMat out = m_h_.data() * u * q_dt_.data().transpose();
    out += a_h_.data() * u * e_dt_;
    out += q_h_.data() * u * m_dt_.data();
    return Eigen::Map<Vector>(out.data(), nh * nt);
  }

 private:
  SparseMat m_h_, a_h_, q_h_, q_dt_, m_dt_;
  SparseMat::Storage e_dt_;  // D + D^T
};

inline Vector wave_operator_apply(const SparseMat& m_h, const SparseMat& a_h,
                                  const SparseMat& q_h, const SparseMat& q_dt,
                                  const SparseMat& d_dt, const SparseMat& m_dt,
                                  const Vector& x) {
  return WaveOperator(m_h, a_h, q_h, q_dt, d_dt, m_dt).apply(x);
}

using LrOp = std::function<LowRank(const LowRank&)>;

struct LrFgmresResult {
  LowRank U;
  SolveReport report;
};

/// Flexible GMRES in factored arithmetic: both the Krylov basis and the
/// preconditioned vectors are kept as low-rank values, recompressed after
/// every operator apply and axpy. The preconditioner may change between
/// iterations (a fixed number of inner RKSM steps is one).
inline LrFgmresResult lr_fgmres(const KronOp& op, const LrOp& precond, const LowRank& f,
                                const GmresConfig& cfg = {}) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  LrFgmresResult res;
  SolveReport& rep = res.report;

  const double norm_f = lowrank_norm(f);
  if (norm_f == 0.0) {
    res.U = LowRank::zero(op.rows(), op.cols());
    rep.converged = true;
    return res;
  }

  auto axpy = [&](const LowRank& x, double alpha, const LowRank& y) {
    return lowrank_truncate(lowrank_concat(x, y.scaled(alpha)), cfg.trunc_tol);
  };

  std::vector<LowRank> basis{f.scaled(1.0 / norm_f)};
  std::vector<LowRank> precond_vecs;
  std::vector<std::vector<double>> h_cols;
  Vector g = Vector::Zero(cfg.maxit + 1);
  g[0] = norm_f;
  detail::Givens rot;
  Index k = 0;
  int peak_rank_cols = 0;

  for (Index j = 0; j < cfg.maxit; ++j) {
    LowRank z = precond(basis[static_cast<size_t>(j)]);
    LowRank w = op.apply(z, cfg.trunc_tol);
    precond_vecs.push_back(std::move(z));

    std::vector<double> col(static_cast<size_t>(j) + 2, 0.0);
    for (Index i = 0; i <= j; ++i) {
      const double hij = lowrank_dot(basis[static_cast<size_t>(i)], w);
      w = axpy(w, -hij, basis[static_cast<size_t>(i)]);
      col[static_cast<size_t>(i)] = hij;
    }
    for (Index i = 0; i <= j; ++i) {
      const double corr = lowrank_dot(basis[static_cast<size_t>(i)], w);
      w = axpy(w, -corr, basis[static_cast<size_t>(i)]);
      col[static_cast<size_t>(i)] += corr;
    }
    const double hlast = lowrank_norm(w);
    col[static_cast<size_t>(j) + 1] = hlast;
    if (!std::isfinite(hlast))
      throw NumericError("lr_fgmres: non-finite value at iteration " + std::to_string(j + 1));

    h_cols.push_back(std::move(col));
    rot.apply_and_extend(h_cols, g, j);
    const double relres = std::abs(g[j + 1]) / norm_f;
    rep.rel_res_history.push_back(relres);
    rep.iterations = static_cast<int>(j) + 1;
    k = j + 1;

    int live = static_cast<int>(f.rank() + w.rank());
    for (const auto& v : basis) live += static_cast<int>(v.rank());
    for (const auto& v : precond_vecs) live += static_cast<int>(v.rank());
    peak_rank_cols = std::max(peak_rank_cols, live);

    if (relres <= cfg.tol || hlast == 0.0) {
      rep.converged = true;
      break;
    }
    const size_t lookback = 5;
    if (rep.rel_res_history.size() > lookback) {
      const double prev = rep.rel_res_history[rep.rel_res_history.size() - 1 - lookback];
      if ((prev - relres) < 1e-3 * prev) {
        rep.stagnated = true;
        break;
      }
    }
    basis.push_back(w.scaled(1.0 / hlast));
  }

  LowRank u = LowRank::zero(op.rows(), op.cols());
  if (k > 0) {
    Vector y = detail::solve_hessenberg(h_cols, g, k);
    for (Index i = 0; i < k; ++i) u = axpy(u, y[i], precond_vecs[static_cast<size_t>(i)]);
  }
  res.U = u;
  rep.rank = static_cast<int>(u.rank());
  rep.mu_mem = peak_rank_cols;
  rep.final_relres = residual_norm_factored(op, u, f) / norm_f;
  if (rep.final_relres <= cfg.tol) rep.converged = true;
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

/// RKSM preconditioner for lr_fgmres: a fixed number of rational Krylov
/// iterations sharing the shifted-factor cache and spectral interval
/// across calls.
inline LrOp make_rksm_precond(const SparseMat& m_h, const SparseMat& a_h, const SparseMat& d,
                              const SparseMat& c, int steps, double trunc_tol = 1e-10) {
  auto cache = std::make_shared<std::map<double, SpdFactor>>();
  auto interval = estimate_spectral_interval(a_h, m_h);
  return [=](const LowRank& v) {
    RksmOptions opts;
    opts.fixed_iters = steps;
    opts.trunc_tol = trunc_tol;
    opts.factor_cache = cache;
    opts.spectral_interval = interval;
    return rksm_solve(m_h, a_h, d, c, v, opts).U;
  };
}

}  // namespace stk
