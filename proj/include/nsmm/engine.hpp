#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmm/mixture.hpp"

namespace nsmm {

/// Thrown when a quantity the theory proves nonnegative (descent, identity
/// gap, mass normalization, iterate bounds) is measurably violated. These
/// are implementation bugs, not data problems, so the fit aborts.
struct invariant_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitConfig {
    std::size_t components = 1;
    std::size_t max_iter = 500;
    double tol_objective = 1e-9;
    double tol_fixed_point = 1e-8;  // L1 residual on the component functions
    std::uint64_t seed = 0;
    /// When set, used verbatim instead of the seeded Dirichlet draw.
    std::optional<WeightMatrix> initial_weights;
};

/// Per-iteration descent diagnostics. `decrease` is the drop in the
/// objective; it must equal kl_components + kl_weights up to rounding and
/// must dominate the quarter-sum of squared L1 step lengths.
struct DescentReport {
    std::size_t iter = 0;
    double objective = 0.0;
    double decrease = 0.0;
    double kl_components = 0.0;        // sum_j KL(e_j', e_j)
    double kl_weights = 0.0;           // (1/n) sum_ij w log(w / w')
    double identity_gap = 0.0;         // |decrease - kl_components - kl_weights|
    double l1_bound_slack = 0.0;       // decrease - (1/4) sum_j ||e_j' - e_j||_1^2
    double fixed_point_residual = 0.0; // max_j ||e_j' - e_j||_1
    double lower_bound_margin = 0.0;   // objective - lower bound
};

enum class StopReason { objective_tol, fixed_point_tol, max_iter };

std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& name);

struct FitResult {
    MixtureState state;
    WeightMatrix weights;  // responsibilities of the final state
    std::vector<DescentReport> trace;
    bool converged = false;
    StopReason reason = StopReason::max_iter;
    std::size_t iterations = 0;  // minimization steps performed, initializer included
};

/// Draws each responsibility row from a flat Dirichlet (or takes the
/// user-provided rows) and applies one minimization step. The resulting
/// state is strictly positive with every marginal value inside the kernel
/// entry range. If a component draws less than 1e-12 total responsibility,
/// the draw is repeated once with seed+1 before giving up.
std::pair<WeightMatrix, MixtureState> initialize(const BinnedDataset& data,
                                                 const FitConfig& config,
                                                 const std::vector<KernelMatrix>& kernels);

/// w[i][j] = lambda_j prod_k (N f[j][k])(bin_ik), normalized over j.
WeightMatrix majorization_step(const MixtureState& state, const BinnedDataset& data,
                               const std::vector<KernelMatrix>& kernels);

/// lambda_j = mean responsibility; f[j][k][g] = sum_i w_ij K_k[g][bin_ik] / sum_i w_ij.
/// Every new marginal is a convex combination of kernel columns, hence has
/// unit quadrature and values inside [min_value, max_value].
MixtureState minimization_step(const WeightMatrix& weights, const BinnedDataset& data,
                               const std::vector<KernelMatrix>& kernels);

/// Full report for one transition (state, w) -> (state', w'), where w is the
/// majorization of `prev` and state' the minimization of w. Reports only;
/// never throws on a violated bound.
DescentReport descent_decomposition(const MixtureState& prev_state, const WeightMatrix& prev_weights,
                                    const MixtureState& next_state, const WeightMatrix& next_weights,
                                    const BinnedDataset& data,
                                    const std::vector<KernelMatrix>& kernels,
                                    std::size_t iter = 0);

using IterationObserver = std::function<void(const MixtureState&, const DescentReport&)>;

/// Alternates majorization and minimization from the seeded initial state,
/// recording one DescentReport per iteration, until the objective decrease
/// or the fixed-point residual falls under its tolerance (or max_iter).
/// Any breach of a reported bound aborts with invariant_violation naming
/// the broken property.
FitResult fit(const BinnedDataset& data, const FitConfig& config,
              const std::vector<KernelMatrix>& kernels,
              const IterationObserver& observer = {});

}  // namespace nsmm
