#pragma once

#include <string>
#include <vector>

namespace nsmm {

/// Per-coordinate Silverman plug-in bandwidth: 0.9 * min(sd, IQR/1.34) * n^(-1/5).
double silverman_bandwidth(const std::vector<double>& column);

/// Full command-line entry point (args exclude the program name).
/// Exit codes: 0 success/convergence, 2 fit stopped at max-iter, 1 any error.
int run_cli(const std::vector<std::string>& args);

}  // namespace nsmm
