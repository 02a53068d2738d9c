#pragma once

#include <cstddef>
#include <vector>

#include "nsmm/engine.hpp"
#include "nsmm/operators.hpp"

// Brute-force full-tensor reference paths. Everything here is quadratic or
// worse in grid size on purpose: these functions exist to check the
// factorized main path and the operator identities, not to be fast.
namespace nsmm::oracle {

/// S applied axis by axis (product kernel).
TensorField tensor_smooth(const TensorField& f, const std::vector<KernelMatrix>& kernels);

/// S* applied axis by axis.
TensorField tensor_adjoint_smooth(const TensorField& f, const std::vector<KernelMatrix>& kernels);

/// exp(S* log f) on the full tensor; requires f strictly positive.
TensorField tensor_nonlinear_smooth(const TensorField& f, const std::vector<KernelMatrix>& kernels);

/// max cellwise |P(S f) - S(P f)|.
double check_commutativity(const TensorField& f, const std::vector<KernelMatrix>& kernels);

/// lambda_j * prod_k f[j][k] assembled as a dense tensor.
TensorField assemble_component(const MixtureState& state, std::size_t j);

/// Nonnegative tensor with unit total mass.
struct GridDensity {
    TensorField field;
};

GridDensity make_grid_density(TensorField field);

/// The empirical measure as a grid density: mass 1/n at every data cell.
GridDensity empirical_density(const BinnedDataset& data);

/// Full-tensor re-evaluation of the discrete objective (log term read off
/// the assembled nonlinear smooths, mass term from tensor quadrature).
double tensor_discrete_objective(const MixtureState& state, const BinnedDataset& data,
                                 const std::vector<KernelMatrix>& kernels);

/// Full-tensor posterior weights at the data cells, one row per observation.
std::vector<std::vector<double>> tensor_posterior_weights(const MixtureState& state,
                                                          const BinnedDataset& data,
                                                          const std::vector<KernelMatrix>& kernels);

/// Target-known objective: sum g log(g / sum_j N e_j) * vol + sum_j mass(e_j).
double grid_truth_objective(const GridDensity& g, const MixtureState& state,
                            const std::vector<KernelMatrix>& kernels);

struct GridTruthStep {
    MixtureState next;
    DescentReport report;  // decrease decomposition of this one step
    double gmap_gap = 0.0; // max |factorized update - P(S(g w_j))| over cells
};

/// One infinite-sample iteration with the target density g known on the
/// grid: weights from the full-tensor nonlinear smooths, update through
/// P(S(g * w_j)), and the exact decrease decomposition of the step.
/// lower_bound_margin is reported against the target-known bound
/// objective >= total mass of g.
GridTruthStep grid_truth_nsmm_step(const GridDensity& g, const MixtureState& state,
                                   const std::vector<KernelMatrix>& kernels);

struct RegularityReport {
    double sup_value = 0.0;     // max cell value over all assembled e_j
    double sup_limit = 0.0;     // prod_k max_value_k
    double worst_slope_excess = 0.0;  // max over axes of slope - slope limit
    bool sup_ok = false;
    bool slope_ok = false;
};

/// Exhaustive scan of every assembled component tensor: sup bound and
/// adjacent-cell slopes against slope_bound_l * prod_{k != l} max_value_k.
RegularityReport check_iterate_regularity(const MixtureState& state,
                                          const std::vector<KernelMatrix>& kernels);

}  // namespace nsmm::oracle
