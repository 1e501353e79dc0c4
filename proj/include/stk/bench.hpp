#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/SparseLU>

#include "stk/cn_baseline.hpp"
#include "stk/discretize.hpp"
#include "stk/la_core.hpp"
#include "stk/outer_krylov.hpp"
#include "stk/rhs_sep.hpp"
#include "stk/rksm.hpp"
#include "stk/sylvester.hpp"
#include "stk/types.hpp"

namespace stk {

struct ExperimentConfig {
  enum class Problem { heat, wave };

  Problem problem = Problem::heat;
  int nh = 0;
  int ny = 0;  // 0 = 1D; otherwise tensor grid nh x ny
  int nt = 0;
  double T = 0.0;
  std::string rhs;  // builtin name or CSV path of t,x,f samples
  std::vector<std::string> solvers;
  double tol = 1e-8;
  int maxit = 200;
  std::string oracle;  // "", "cn", "dense"
  bool trapezoidal_time = false;
  std::string history_path;
  std::string out_path;
  unsigned seed = 0;
  bool allow_nonconverged = false;
  int jobs = 1;
  int degree = 3;         // wave spline degree
  double eim_tol = 0.0;   // 0 = 0.01 * tol
  int precond_steps = 5;  // inner RKSM iterations of the lrfgmres preconditioner
  int repeats = 1;        // timing repeats per cell, median reported
  bool stable_csv = false;

  Index total_nh() const { return ny > 0 ? Index(nh) * ny : Index(nh); }
  double eim_tolerance() const { return eim_tol > 0 ? eim_tol : 0.01 * tol; }

  void validate() const {
    if (nh < 1 || nt < 1) throw UsageError("nh and nt must be >= 1");
    if (ny < 0) throw UsageError("ny must be >= 0");
    if (!(T > 0)) throw UsageError("T must be positive");
    if (!(tol > 0 && tol < 1)) throw UsageError("tol must be in (0,1)");
    if (maxit < 1) throw UsageError("maxit must be >= 1");
    if (jobs < 1) throw UsageError("jobs must be >= 1");
    if (repeats < 1) throw UsageError("repeats must be >= 1");
    if (precond_steps < 1) throw UsageError("precond-steps must be >= 1");
    if (degree != 2 && degree != 3) throw UsageError("degree must be 2 or 3");
    if (solvers.empty()) throw UsageError("at least one --solver is required");

    const bool heat = problem == Problem::heat;
    for (const auto& s : solvers) {
      const bool ok = heat ? (s == "rksm" || s == "lrfgmres" || s == "cn" || s == "dense")
                           : (s == "gmres-lyap" || s == "dense");
      if (!ok) throw UsageError("unknown solver '" + s + "' for this problem");
      if (s == "dense" && total_nh() * nt > 200000)
        throw UsageError("dense solver refuses N_h*N_t > 2e5 (got " +
                         std::to_string(total_nh() * nt) + ")");
    }
    if (!oracle.empty()) {
      if (oracle != "cn" && oracle != "dense") throw UsageError("oracle must be cn or dense");
      if (oracle == "cn" && !heat) throw UsageError("the cn oracle applies to heat only");
      if (oracle == "dense" && total_nh() * nt > 200000)
        throw UsageError("dense oracle refuses N_h*N_t > 2e5");
    }
    if (!heat && ny > 0) throw UsageError("the wave problem is 1D in space");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::vector<std::string> config_file_tokens(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config file: empty key in line: " + line);
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

}  // namespace detail

/// Parse command line (and an optional `key = value` config file given via
/// --config; explicit flags override the file). Returns nullopt when help
/// was requested and printed.
inline std::optional<ExperimentConfig> parse_config(const std::vector<std::string>& args,
                                                    std::ostream& help_out = std::cout) {
  ExperimentConfig cfg;

  // extract --config first so its values can be overridden by real flags
  std::vector<std::string> cli;
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      config_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      cli.push_back(a);
    }
  }
  if (cli.empty()) throw UsageError("usage: stk <heat|wave> [options]; see --help");

  CLI::App app{"Space-time Kronecker-structured solvers for heat and wave problems"};
  app.require_subcommand(1);

  std::string solver_list, rhs_spec;
  auto add_common = [&](CLI::App* sub, double default_T, int default_n,
                        const std::string& default_rhs) {
    sub->add_option("--nh", cfg.nh, "active spatial basis functions (per axis with --ny)")
        ->default_val(default_n);
    sub->add_option("--ny", cfg.ny, "second tensor axis (heat only)");
    sub->add_option("--nt", cfg.nt, "time elements")->default_val(default_n);
    sub->add_option("--T", cfg.T, "final time")->default_val(default_T);
    sub->add_option("--solver", solver_list, "comma-separated solver list")->required();
    sub->add_option("--rhs", rhs_spec, "builtin name or CSV path of t,x,f samples")
        ->default_val(default_rhs);
    sub->add_option("--tol", cfg.tol, "relative residual tolerance");
    sub->add_option("--maxit", cfg.maxit, "iteration cap");
    sub->add_option("--oracle", cfg.oracle, "reference solution: cn or dense");
    sub->add_flag("--trapezoidal-time", cfg.trapezoidal_time,
                  "trapezoidal temporal quadrature of the right-hand side");
    sub->add_option("--history", cfg.history_path, "residual history CSV path");
    sub->add_option("--out", cfg.out_path, "result table CSV path (default stdout)");
    sub->add_option("--seed", cfg.seed, "seed for randomized fixtures");
    sub->add_flag("--allow-nonconverged", cfg.allow_nonconverged,
                  "exit 0 even when a solver misses tol");
    sub->add_option("--jobs", cfg.jobs, "parallel (method) cells");
    sub->add_option("--degree", cfg.degree, "wave spline degree (2 or 3)");
    sub->add_option("--eim-tol", cfg.eim_tol, "EIM tolerance (default 0.01*tol)");
    sub->add_option("--precond-steps", cfg.precond_steps, "inner RKSM steps in lrfgmres");
    sub->add_option("--repeats", cfg.repeats, "timing repeats, median reported");
    sub->add_flag("--stable-csv", cfg.stable_csv, "write time_s as 0 for byte-stable output");
    for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };

  CLI::App* heat = app.add_subcommand("heat", "heat equation experiment");
  CLI::App* wave = app.add_subcommand("wave", "wave equation experiment");
  add_common(heat, 10.0, 199, "heat-ex1");
  add_common(wave, 1.0, 256, "wave-ex2");

  std::vector<std::string> merged{cli.front()};
  if (!config_path.empty()) {
    auto file_tokens = detail::config_file_tokens(config_path);
    merged.insert(merged.end(), file_tokens.begin(), file_tokens.end());
  }
  merged.insert(merged.end(), cli.begin() + 1, cli.end());

  try {
    std::reverse(merged.begin(), merged.end());
    app.parse(merged);
  } catch (const CLI::CallForHelp&) {
    help_out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  cfg.problem = heat->parsed() ? ExperimentConfig::Problem::heat : ExperimentConfig::Problem::wave;
  cfg.solvers = detail::split_csv_list(solver_list);
  cfg.rhs = rhs_spec;
  cfg.validate();
  return cfg;
}

/// One table line per (method, N_h, N_t) run.
struct ResultRow {
  std::string method;
  Index n_h = 0, n_t = 0;
  int iters = 0, mu_mem = 0, rank = 0;
  double time_s = 0.0, relres = 0.0;
  std::optional<double> err_oracle;
  bool converged = true;
};

inline std::string result_csv_header() {
  return "method,N_h,N_t,iters,mu_mem,rank,time_s,relres,err_oracle";
}

inline std::string to_csv(const ResultRow& row, bool stable_time = false) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%d,%d,%d,%.4f,%.6e,",
                row.method.c_str(), static_cast<long long>(row.n_h),
                static_cast<long long>(row.n_t), row.iters, row.mu_mem, row.rank,
                stable_time ? 0.0 : row.time_s, row.relres);
  std::string out(buf);
  if (row.err_oracle) {
    std::snprintf(buf, sizeof(buf), "%.6e", *row.err_oracle);
    out += buf;
  }
  return out;
}

inline void write_result_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                             bool stable_time = false) {
  os << result_csv_header() << "\n";
  for (const auto& r : rows) os << to_csv(r, stable_time) << "\n";
}

namespace detail {

inline int numerical_rank(const Vector& singular_values, double rel_tol = 1e-8) {
  if (singular_values.size() == 0) return 0;
  const double smax = singular_values.maxCoeff();
  if (smax <= 0) return 0;
  int r = 0;
  for (Index i = 0; i < singular_values.size(); ++i)
    if (singular_values[i] > rel_tol * smax) ++r;
  return r;
}

inline int lowrank_numerical_rank(const LowRank& u, double rel_tol = 1e-8) {
  if (u.rank() == 0) return 0;
  auto q1 = thin_qr(u.left);
  auto q2 = thin_qr(u.right);
  Eigen::JacobiSVD<DenseMat> svd(q1.R * q2.R.transpose());
  return numerical_rank(svd.singularValues(), rel_tol);
}

inline int dense_numerical_rank(const DenseMat& u, double rel_tol = 1e-8) {
  Eigen::BDCSVD<DenseMat> svd(u);
  return numerical_rank(svd.singularValues(), rel_tol);
}

inline int fair_mu_mem(double stored_doubles, Index n_h, Index n_t) {
  return static_cast<int>(std::ceil(stored_doubles / double(n_h + n_t)));
}

/// Median of the per-run wall times; the (deterministic) result of the last
/// run is kept by the caller.
template <class Fn>
double median_wall_time(int repeats, Fn&& run) {
  std::vector<double> times;
  for (int i = 0; i < repeats; ++i) times.push_back(run());
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

inline std::string history_file_name(const std::string& base, const std::string& method,
                                     bool unique) {
  if (unique) return base;
  const auto dot = base.find_last_of('.');
  if (dot == std::string::npos) return base + "-" + method;
  return base.substr(0, dot) + "-" + method + base.substr(dot);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// heat experiment

struct HeatBuiltinRhs {
  ScalarFn theta, fx, fy;
};

/// Desk-scale analogue of the benchmark forcing 10 sin(t) t cos(pi/2 x)...
/// restricted to the active spatial axes.
inline HeatBuiltinRhs heat_ex1_rhs() {
  return {[](double t) { return 10.0 * std::sin(t) * t; },
          [](double x) { return std::cos(M_PI / 2.0 * x); },
          [](double y) { return std::cos(M_PI / 2.0 * y); }};
}

inline SeparableRHS load_csv_rhs(const std::string& path, double eim_tol,
                                 std::vector<double>* t_grid_out = nullptr,
                                 std::vector<double>* x_grid_out = nullptr) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open RHS CSV: " + path);
  std::vector<double> ts, xs, fs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || !(std::isdigit(line[0]) || line[0] == '-' || line[0] == '+' ||
                          line[0] == '.'))
      continue;  // header or comment
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
      throw UsageError("RHS CSV: expected t,x,f triples");
    ts.push_back(std::stod(a));
    xs.push_back(std::stod(b));
    fs.push_back(std::stod(c));
  }
  std::vector<double> t_grid = ts, x_grid = xs;
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(t_grid);
  uniq(x_grid);
  if (t_grid.size() * x_grid.size() != ts.size())
    throw UsageError("RHS CSV: samples do not form a complete t-x grid");
  DenseMat samples(t_grid.size(), x_grid.size());
  samples.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (size_t k = 0; k < ts.size(); ++k) {
    const auto ti = std::lower_bound(t_grid.begin(), t_grid.end(), ts[k]) - t_grid.begin();
    const auto xi = std::lower_bound(x_grid.begin(), x_grid.end(), xs[k]) - x_grid.begin();
    samples(ti, xi) = fs[k];
  }
  if (samples.hasNaN()) throw UsageError("RHS CSV: duplicate or missing grid samples");
  if (t_grid_out) *t_grid_out = t_grid;
  if (x_grid_out) *x_grid_out = x_grid;
  return eim_separate(t_grid, x_grid, samples, eim_tol, 50);
}

struct HeatAssembly {
  TimeGrid time{1, 1.0};
  SparseMat M, A, D, C;
  RHSFactors rhs;       // quadrature mode selected by the config
  RHSFactors rhs_trap;  // trapezoidal temporal mode (drives the CN oracle)
  KronOp op;
  Index n_h = 0;
};

inline HeatAssembly assemble_heat(const ExperimentConfig& cfg) {
  HeatAssembly out;
  out.time = TimeGrid(cfg.nt, cfg.T);
  auto [d, c] = heat_time_matrices(out.time);
  out.D = std::move(d);
  out.C = std::move(c);

  const bool builtin = cfg.rhs == "heat-ex1";
  SpaceGrid1D grid_x(-1.0, 1.0, cfg.nh);

  if (cfg.ny > 0) {
    if (!builtin) throw UsageError("the 2D heat problem supports only --rhs heat-ex1");
    SpaceGrid1D grid_y(-1.0, 1.0, cfg.ny);
    auto [m, a] = fem2d_matrices(grid_x, grid_y);
    out.M = std::move(m);
    out.A = std::move(a);

    const auto ex1 = heat_ex1_rhs();
    SeparableRHS rx = separable_rhs({{ex1.theta, ex1.fx}});
    RHSFactors fx = project_rhs_heat(rx, out.time, grid_x, cfg.trapezoidal_time);
    RHSFactors fx_trap = project_rhs_heat(rx, out.time, grid_x, true);
    SeparableRHS ry = separable_rhs({{ex1.theta, ex1.fy}});
    RHSFactors fy = project_rhs_heat(ry, out.time, grid_y, false);

    auto kron_cols = [](const DenseMat& gx, const DenseMat& gy) {
      DenseMat g(gx.rows() * gy.rows(), gx.cols());
      for (Index p = 0; p < gx.cols(); ++p)
        for (Index i = 0; i < gx.rows(); ++i)
          g.col(p).segment(i * gy.rows(), gy.rows()) = gx(i, p) * gy.col(p);
      return g;
    };
    out.rhs = {kron_cols(fx.G, fy.G), fx.H};
    out.rhs_trap = {out.rhs.G, fx_trap.H};
  } else {
    SeparableRHS rhs;
    if (builtin) {
      const auto ex1 = heat_ex1_rhs();
      rhs = separable_rhs({{ex1.theta, ex1.fx}});
    } else {
      std::vector<double> xg;
      rhs = load_csv_rhs(cfg.rhs, cfg.eim_tolerance(), nullptr, &xg);
      grid_x = SpaceGrid1D(xg.front(), xg.back(), cfg.nh);
    }
    auto [m, a] = fem1d_matrices(grid_x);
    out.M = std::move(m);
    out.A = std::move(a);
    out.rhs = project_rhs_heat(rhs, out.time, grid_x, cfg.trapezoidal_time);
    out.rhs_trap = project_rhs_heat(rhs, out.time, grid_x, true);
  }
  out.n_h = out.M.rows();
  out.op = heat_kron_op(out.M, out.A, out.D, out.C);
  return out;
}

namespace detail {

inline DenseMat kron_direct_solve(const KronOp& op, const DenseMat& f) {
  const Index nh = op.rows(), nt = op.cols();
  SparseMat::Storage sys(nh * nt, nh * nt);
  for (const auto& term : op.terms)
    sys += SparseMat::Storage(
        sparse_kron(SparseMat(SparseMat::Storage(term.D.data().transpose())),
                    term.A)
            .data());
  sys.makeCompressed();
  Eigen::SparseLU<SparseMat::Storage> lu(sys);
  if (lu.info() != Eigen::Success)
    throw NumericError("dense (direct Kronecker) solver: factorization failed");
  Eigen::Map<const Vector> b(f.data(), nh * nt);
  Vector x = lu.solve(b);
  return Eigen::Map<const DenseMat>(x.data(), nh, nt);
}

}  // namespace detail

inline std::vector<ResultRow> run_heat_experiment(const ExperimentConfig& cfg) {
  const HeatAssembly pb = assemble_heat(cfg);
  const LowRank f = pb.rhs.lowrank();
  const double norm_f = lowrank_norm(f);

  std::optional<Trajectory> cn_oracle;
  std::optional<DenseMat> dense_oracle;
  if (cfg.oracle == "cn")
    cn_oracle = crank_nicolson(pb.M, pb.A, rhs_columns_from_factors(pb.rhs_trap), pb.time);
  if (cfg.oracle == "dense") dense_oracle = detail::kron_direct_solve(pb.op, f.dense());

  auto column_error = [&](const DenseMat& u) {
    double worst = 0.0;
    for (Index l = 0; l < u.cols(); ++l) {
      const double ref = cn_oracle->columns.col(l).norm();
      const double diff = (u.col(l) - cn_oracle->columns.col(l)).norm();
      worst = std::max(worst, diff / (ref > 0 ? ref : 1.0));
    }
    return worst;
  };

  std::vector<ResultRow> rows(cfg.solvers.size());
  auto run_cell = [&](size_t idx) {
    const std::string& method = cfg.solvers[idx];
    ResultRow row;
    row.method = method;
    row.n_h = pb.n_h;
    row.n_t = cfg.nt;

    if (method == "rksm" || method == "lrfgmres") {
      LowRank u;
      SolveReport rep;
      row.time_s = detail::median_wall_time(cfg.repeats, [&]() {
        if (method == "rksm") {
          RksmOptions opts;
          opts.tol = cfg.tol;
          opts.maxit = cfg.maxit;
          auto res = rksm_solve(pb.M, pb.A, pb.D, pb.C, f, opts);
          u = std::move(res.U);
          rep = std::move(res.report);
        } else {
          GmresConfig gc;
          gc.tol = cfg.tol;
          gc.maxit = cfg.maxit;
          auto precond = make_rksm_precond(pb.M, pb.A, pb.D, pb.C, cfg.precond_steps);
          auto res = lr_fgmres(pb.op, precond, f, gc);
          u = std::move(res.U);
          rep = std::move(res.report);
        }
        return rep.wall_time_s;
      });
      row.iters = rep.iterations;
      row.mu_mem = rep.mu_mem;
      row.rank = detail::lowrank_numerical_rank(u);
      row.relres = residual_norm_factored(pb.op, u, f) / norm_f;
      row.converged = row.relres <= cfg.tol;
      if (cn_oracle) row.err_oracle = column_error(u.dense());
      if (dense_oracle)
        row.err_oracle = (u.dense() - *dense_oracle).norm() / dense_oracle->norm();
      if (!cfg.history_path.empty()) {
        std::ofstream os(detail::history_file_name(cfg.history_path, method,
                                                   cfg.solvers.size() == 1));
        write_history_csv(os, rep);
      }
    } else if (method == "cn") {
      Trajectory traj;
      row.time_s = detail::median_wall_time(cfg.repeats, [&]() {
        const auto t0 = std::chrono::steady_clock::now();
        traj = crank_nicolson(pb.M, pb.A, rhs_columns_from_factors(pb.rhs_trap), pb.time);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      row.iters = cfg.nt;
      row.mu_mem = detail::fair_mu_mem(double(pb.n_h) * cfg.nt, pb.n_h, cfg.nt);
      row.rank = detail::dense_numerical_rank(traj.columns);
      const LowRank f_trap = pb.rhs_trap.lowrank();
      DenseMat resid = f_trap.dense() - pb.op.apply(traj.columns);
      row.relres = resid.norm() / lowrank_norm(f_trap);
      row.converged = true;
      if (cn_oracle) row.err_oracle = column_error(traj.columns);
      if (dense_oracle)
        row.err_oracle = (traj.columns - *dense_oracle).norm() / dense_oracle->norm();
    } else {  // dense
      DenseMat u;
      row.time_s = detail::median_wall_time(cfg.repeats, [&]() {
        const auto t0 = std::chrono::steady_clock::now();
        u = detail::kron_direct_solve(pb.op, f.dense());
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      row.iters = 1;
      row.mu_mem = detail::fair_mu_mem(double(pb.n_h) * cfg.nt, pb.n_h, cfg.nt);
      row.rank = detail::dense_numerical_rank(u);
      row.relres = (f.dense() - pb.op.apply(u)).norm() / norm_f;
      row.converged = true;
      if (cn_oracle) row.err_oracle = column_error(u);
    }
    rows[idx] = std::move(row);
  };

  if (cfg.jobs <= 1 || cfg.solvers.size() <= 1) {
    for (size_t i = 0; i < cfg.solvers.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (size_t i = next.fetch_add(1); i < cfg.solvers.size(); i = next.fetch_add(1))
        run_cell(i);
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(cfg.jobs, static_cast<int>(cfg.solvers.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

// ---------------------------------------------------------------------------
// wave experiment

/// Forcing (1 + 4 pi^2 t^2) sin(2 pi x), whose exact solution is
/// u(t,x) = t^2 sin(2 pi x).
inline SeparableRHS wave_ex2_rhs() {
  return separable_rhs({{[](double t) { return 1.0 + 4.0 * M_PI * M_PI * t * t; },
                         [](double x) { return std::sin(2.0 * M_PI * x); }}});
}

struct WaveAssembly {
  SplineBasis time_basis;
  SplineBasis space_basis;
  WaveTimeMatrices tm;
  WaveSpaceMatrices sm;
  RHSFactors rhs;
  KronOp op;
  bool exact_solution_known = false;
};

inline WaveAssembly assemble_wave(const ExperimentConfig& cfg) {
  const TimeGrid time(cfg.nt, cfg.T);
  SpaceGrid1D space(0.0, 1.0, cfg.nh);

  const bool builtin = cfg.rhs == "wave-ex2";
  SeparableRHS rhs;
  if (builtin) {
    rhs = wave_ex2_rhs();
  } else {
    std::vector<double> xg;
    rhs = load_csv_rhs(cfg.rhs, cfg.eim_tolerance(), nullptr, &xg);
    space = SpaceGrid1D(xg.front(), xg.back(), cfg.nh);
  }

  WaveAssembly out{wave_time_basis(time, cfg.degree), wave_space_basis(space, cfg.degree),
                   {}, {}, {}, {}, builtin};
  out.tm = wave_time_matrices(out.time_basis);
  out.sm = wave_space_matrices(out.space_basis);
  out.rhs = project_rhs_wave(rhs, out.time_basis, out.space_basis);

  SparseMat e_dt(SparseMat::Storage(out.tm.D.data() + SparseMat::Storage(
                                                          out.tm.D.data().transpose())),
                 true);
  out.op.terms.push_back({out.sm.M, out.tm.Q});
  out.op.terms.push_back({out.sm.A, e_dt});
  out.op.terms.push_back({out.sm.Q, out.tm.M});
  out.op.check_shapes();
  return out;
}

/// L2(I x Omega) error of the reconstructed solution
/// u_delta = sum U[i,k] (rho_ddot^k psi_i + rho^k A psi_i), A = -Laplace,
/// against an exact u(t,x), by tensor Gauss quadrature.
inline double wave_l2_error(const DenseMat& u_coeff, const SplineBasis& time_basis,
                            const SplineBasis& space_basis,
                            const std::function<double(double, double)>& exact) {
  auto tables = [](const SplineBasis& basis, int nq) {
    const QuadRule ref = gauss_legendre(nq, 0.0, 1.0);
    const int total = basis.num_elems() * nq;
    DenseMat val = DenseMat::Zero(total, basis.num_active());
    DenseMat dd = DenseMat::Zero(total, basis.num_active());
    Vector pts(total), wts(total);
    for (int e = 0; e < basis.num_elems(); ++e) {
      const double xl = basis.elem_left(e), xr = basis.elem_right(e);
      for (int q = 0; q < nq; ++q) {
        const int row = e * nq + q;
        pts[row] = xl + (xr - xl) * ref.nodes[q];
        wts[row] = (xr - xl) * ref.weights[q];
        for (const auto& [j, i] : basis.active_on_element(e)) {
          val(row, j) = basis.eval_full(i, pts[row], 0);
          dd(row, j) = basis.eval_full(i, pts[row], 2);
        }
      }
    }
    return std::make_tuple(val, dd, pts, wts);
  };

  const auto [tval, tdd, tp, tw] = tables(time_basis, time_basis.degree() + 2);
  const auto [xval, xdd, xp, xw] = tables(space_basis, space_basis.degree() + 2);

  DenseMat u_grid = xval * u_coeff * tdd.transpose() - xdd * u_coeff * tval.transpose();
  double err2 = 0.0;
  for (Index qx = 0; qx < u_grid.rows(); ++qx)
    for (Index qt = 0; qt < u_grid.cols(); ++qt) {
      const double diff = u_grid(qx, qt) - exact(tp[qt], xp[qx]);
      err2 += xw[qx] * tw[qt] * diff * diff;
    }
  return std::sqrt(err2);
}

inline std::vector<ResultRow> run_wave_experiment(const ExperimentConfig& cfg) {
  const WaveAssembly pb = assemble_wave(cfg);
  const Index nh = pb.sm.M.rows(), ntb = pb.tm.Q.rows();
  const DenseMat f_dense = pb.rhs.G * pb.rhs.H.transpose();
  Eigen::Map<const Vector> b(f_dense.data(), nh * ntb);
  const double norm_b = b.norm();

  const WaveOperator wave_op(pb.sm.M, pb.sm.A, pb.sm.Q, pb.tm.Q, pb.tm.D, pb.tm.M);
  auto exact = [](double t, double x) { return t * t * std::sin(2.0 * M_PI * x); };

  std::optional<DenseMat> dense_oracle;
  if (cfg.oracle == "dense") dense_oracle = detail::kron_direct_solve(pb.op, f_dense);

  std::vector<ResultRow> rows(cfg.solvers.size());
  auto run_cell = [&](size_t idx) {
    const std::string& method = cfg.solvers[idx];
    ResultRow row;
    row.method = method;
    row.n_h = nh;
    row.n_t = cfg.nt;

    DenseMat u;
    if (method == "gmres-lyap") {
      SolveReport rep;
      row.time_s = detail::median_wall_time(cfg.repeats, [&]() {
        const auto t0 = std::chrono::steady_clock::now();
        TwoTermPrecond precond(pb.sm.M, pb.sm.Q, pb.tm.M, pb.tm.Q);
        GmresConfig gc;
        gc.tol = cfg.tol;
        gc.maxit = cfg.maxit;
        auto [x, r] = gmres([&](const Vector& v) { return wave_op.apply(v); },
                            [&](const Vector& v) {
                              Eigen::Map<const DenseMat> vm(v.data(), nh, ntb);
                              DenseMat w = precond.solve(vm);
                              return Vector(Eigen::Map<Vector>(w.data(), nh * ntb));
                            },
                            b, gc);
        u = Eigen::Map<const DenseMat>(x.data(), nh, ntb);
        rep = std::move(r);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      row.iters = rep.iterations;
      row.mu_mem =
          detail::fair_mu_mem(double(rep.mu_mem) * double(nh) * double(ntb), nh, ntb);
      row.relres = (b - wave_op.apply(Eigen::Map<const Vector>(u.data(), nh * ntb))).norm() /
                   norm_b;
      row.converged = row.relres <= cfg.tol;
      if (!cfg.history_path.empty()) {
        std::ofstream os(detail::history_file_name(cfg.history_path, method,
                                                   cfg.solvers.size() == 1));
        write_history_csv(os, rep);
      }
    } else {  // dense
      row.time_s = detail::median_wall_time(cfg.repeats, [&]() {
        const auto t0 = std::chrono::steady_clock::now();
        u = detail::kron_direct_solve(pb.op, f_dense);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      row.iters = 1;
      row.mu_mem = detail::fair_mu_mem(double(nh) * double(ntb), nh, ntb);
      row.relres = (f_dense - pb.op.apply(u)).norm() / norm_b;
      row.converged = true;
    }
    row.rank = detail::dense_numerical_rank(u);
    if (dense_oracle && method != "dense")
      row.err_oracle = (u - *dense_oracle).norm() / dense_oracle->norm();
    else if (pb.exact_solution_known)
      row.err_oracle = wave_l2_error(u, pb.time_basis, pb.space_basis, exact);
    rows[idx] = std::move(row);
  };

  if (cfg.jobs <= 1 || cfg.solvers.size() <= 1) {
    for (size_t i = 0; i < cfg.solvers.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (size_t i = next.fetch_add(1); i < cfg.solvers.size(); i = next.fetch_add(1))
        run_cell(i);
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(cfg.jobs, static_cast<int>(cfg.solvers.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  return cfg.problem == ExperimentConfig::Problem::heat ? run_heat_experiment(cfg)
                                                        : run_wave_experiment(cfg);
}

}  // namespace stk
