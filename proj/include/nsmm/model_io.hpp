#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsmm/engine.hpp"

namespace nsmm {

struct CoordinateSpec {
    double a = 0.0;
    double b = 1.0;
    std::size_t grid_size = 0;
    double bandwidth = 0.0;
};

/// Serialized fit: everything needed to rebuild the kernels and the final
/// state bit-exactly, plus fit metadata and the final descent report.
struct ModelDocument {
    int schema_version = 1;
    KernelFamily family = KernelFamily::gaussian;
    std::vector<CoordinateSpec> coordinates;
    std::vector<double> lambda;
    std::vector<std::vector<std::vector<double>>> marginals;  // [m][r][G]
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    bool converged = false;
    StopReason reason = StopReason::max_iter;
    std::string summation_path = "sequential";
    DescentReport final_report;
};

ModelDocument make_document(const std::vector<KernelMatrix>& kernels, const FitResult& result,
                            std::uint64_t seed);

/// JSON with every number at 17 significant digits; written atomically.
void save_model(const ModelDocument& doc, const std::string& path);
ModelDocument load_model(const std::string& path);

std::vector<Grid1D> grids_from_document(const ModelDocument& doc);
std::vector<KernelMatrix> kernels_from_document(const ModelDocument& doc);
MixtureState state_from_document(const ModelDocument& doc);

}  // namespace nsmm
