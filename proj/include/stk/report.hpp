#pragma once

#include <ostream>
#include <vector>

namespace stk {

/// Outcome of one iterative solve. mu_mem counts stored columns in units
/// of one length-N_h plus one length-N_t column, the memory model in which
/// a factored method holding k columns of each kind costs k*(N_h + N_t).
struct SolveReport {
  int iterations = 0;
  std::vector<double> rel_res_history;
  int mu_mem = 0;
  int rank = 0;
  double wall_time_s = 0.0;
  double final_relres = 0.0;
  bool converged = false;
  bool stagnated = false;
};

inline void write_history_csv(std::ostream& os, const SolveReport& report) {
  os << "iter,relres\n";
  for (size_t i = 0; i < report.rel_res_history.size(); ++i)
    os << i + 1 << "," << report.rel_res_history[i] << "\n";
}

}  // namespace stk
