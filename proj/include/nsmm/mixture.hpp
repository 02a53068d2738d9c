#pragma once

#include <cstddef>
#include <vector>

#include "nsmm/operators.hpp"

namespace nsmm {

/// Algorithm iterate: component masses lambda_j and unit-mass marginal
/// densities f[j][k].  The component function is e_j = lambda_j * prod_k f[j][k];
/// the factor scaling of the product form is canonicalized away.
struct MixtureState {
    std::size_t components = 0;  // m
    std::size_t dimension = 0;   // r
    std::vector<double> lambda;
    std::vector<std::vector<GridFunction1D>> marginals;  // [m][r]
};

/// Observations mapped to nearest-midpoint cells, one index per coordinate.
struct BinnedDataset {
    std::size_t count = 0;      // n
    std::size_t dimension = 0;  // r
    std::vector<Grid1D> grids;
    std::vector<std::vector<std::size_t>> bins;  // [n][r]
    std::vector<std::vector<double>> raw;        // [n][r]
};

/// Maps each coordinate to its nearest grid midpoint. A value exactly on a
/// cell boundary goes to the lower cell. Out-of-domain values are rejected
/// with the offending row and coordinate named.
BinnedDataset bin_dataset(const std::vector<std::vector<double>>& raw,
                          const std::vector<Grid1D>& grids);

/// Posterior responsibilities, one row per observation; rows sum to one and
/// every entry is strictly positive.
struct WeightMatrix {
    std::size_t rows = 0;  // n
    std::size_t cols = 0;  // m
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

/// Per-component nonlinearly smoothed marginals, cached once per iterate:
/// values[j][k][g] = (N f[j][k])[g].
using NhTable = std::vector<std::vector<std::vector<double>>>;

NhTable make_nh_table(const MixtureState& state, const std::vector<KernelMatrix>& kernels);

/// -(1/n) sum_i log sum_j lambda_j prod_k (N f[j][k])(bin_ik)  +  sum_j lambda_j.
double discrete_objective(const MixtureState& state, const BinnedDataset& data,
                          const std::vector<KernelMatrix>& kernels);

/// Same, reusing a precomputed smoother table.
double discrete_objective_with(const NhTable& nh, const MixtureState& state,
                               const BinnedDataset& data);

/// Scaling diagnostic: the objective restricted to mass rescalings
/// alpha * state is strictly convex with minimizer alpha_hat = 1 / sum(lambda).
/// Evaluates the objective on a small alpha grid around (and including)
/// alpha_hat and reports whether alpha_hat attains the minimum.
struct RescaleCheck {
    double alpha_hat = 1.0;
    std::vector<double> alphas;
    std::vector<double> objectives;
    double objective_at_alpha_hat = 0.0;
    bool optimal_at_alpha_hat = false;
};

RescaleCheck rescale_optimality_check(const MixtureState& state, const BinnedDataset& data,
                                      const std::vector<KernelMatrix>& kernels);

}  // namespace nsmm
