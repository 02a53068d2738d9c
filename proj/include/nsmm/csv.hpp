#pragma once

#include <string>
#include <vector>

#include "nsmm/engine.hpp"

namespace nsmm {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// One header row, then all-numeric rows. Errors name the offending file
/// line and column; a header-only file is rejected as having no observations.
CsvTable load_csv(const std::string& path);

/// Doubles formatted with 17 significant digits (lossless round-trip).
std::string format_double(double v);

/// Writes to a temp file in the target directory and renames into place.
void atomic_write(const std::string& path, const std::string& content);

void write_data_csv(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows);

/// Fixed column schema: iter, objective, decrease, kl_components, kl_weights,
/// identity_gap, l1_bound_slack, fixed_point_residual, lower_bound_margin.
void write_trace_csv(const std::string& path, const std::vector<DescentReport>& trace);

}  // namespace nsmm
