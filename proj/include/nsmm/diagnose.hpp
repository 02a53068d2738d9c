#pragma once

#include <string>
#include <vector>

#include "nsmm/model_io.hpp"

namespace nsmm {

struct PropertyResult {
    std::string name;    // e.g. "Theorem 1 (mixing mass)"
    bool pass = false;
    double gap = 0.0;    // measured quantity, meaning depends on the check
    std::string detail;  // human-readable statement of what was measured
};

/// Re-derives every checkable property from a serialized model and the raw
/// dataset it was fit on: mass normalization, iterate bounds, the objective
/// lower bound, operator commutativity at reference scale, and the descent
/// identity over a few fresh iterations from the stored state.
std::vector<PropertyResult> run_diagnostics(const ModelDocument& doc,
                                            const std::vector<std::vector<double>>& raw);

}  // namespace nsmm
