#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stk/bench.hpp"

// Exit codes: 0 success, 1 usage error, 2 non-convergence without
// --allow-nonconverged, 3 internal numeric error.
int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    auto cfg = stk::parse_config(args);
    if (!cfg) return 0;  // --help

    const auto rows = stk::run_experiment(*cfg);
    if (cfg->out_path.empty()) {
      stk::write_result_csv(std::cout, rows, cfg->stable_csv);
    } else {
      std::ofstream os(cfg->out_path);
      if (!os) {
        std::cerr << "stk: cannot open output file: " << cfg->out_path << "\n";
        return 1;
      }
      stk::write_result_csv(os, rows, cfg->stable_csv);
    }

    bool all_converged = true;
    for (const auto& r : rows) all_converged = all_converged && r.converged;
    if (!all_converged && !cfg->allow_nonconverged) {
      std::cerr << "stk: a solver did not reach the requested tolerance "
                << "(rerun with --allow-nonconverged to accept)\n";
      return 2;
    }
    return 0;
  } catch (const stk::UsageError& e) {
    std::cerr << "stk: " << e.what() << "\n";
    return 1;
  } catch (const stk::ArgumentError& e) {
    std::cerr << "stk: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "stk: numeric failure: " << e.what() << "\n";
    return 3;
  }
}
