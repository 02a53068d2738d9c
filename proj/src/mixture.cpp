#include "nsmm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nsmm {

BinnedDataset bin_dataset(const std::vector<std::vector<double>>& raw,
                          const std::vector<Grid1D>& grids) {
    if (grids.empty()) throw std::invalid_argument("bin_dataset: no grids");
    if (raw.empty()) throw std::invalid_argument("bin_dataset: no observations");
    const std::size_t r = grids.size();

    BinnedDataset data;
    data.count = raw.size();
    data.dimension = r;
    data.grids = grids;
    data.raw = raw;
    data.bins.assign(raw.size(), std::vector<std::size_t>(r, 0));

    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != r)
            throw std::invalid_argument("bin_dataset: row " + std::to_string(i) + " has " +
                                        std::to_string(raw[i].size()) + " coordinates, expected " +
                                        std::to_string(r));
        for (std::size_t k = 0; k < r; ++k) {
            const Grid1D& g = grids[k];
            const double x = raw[i][k];
            if (!std::isfinite(x) || x < g.a || x > g.b)
                throw std::invalid_argument("bin_dataset: value " + std::to_string(x) + " at row " +
                                            std::to_string(i) + ", coordinate " + std::to_string(k) +
                                            " lies outside [" + std::to_string(g.a) + ", " +
                                            std::to_string(g.b) + "]");
            // nearest midpoint; an exact cell boundary rounds toward the lower cell
            const double t = (x - g.a) / g.delta;
            long idx = static_cast<long>(std::ceil(t)) - 1;
            if (idx < 0) idx = 0;
            if (idx >= static_cast<long>(g.cells)) idx = static_cast<long>(g.cells) - 1;
            data.bins[i][k] = static_cast<std::size_t>(idx);
        }
    }
    return data;
}

namespace {

void require_consistent(const MixtureState& state, const BinnedDataset& data,
                        const std::vector<KernelMatrix>& kernels) {
    if (state.dimension != data.dimension || kernels.size() != state.dimension)
        throw std::invalid_argument("mixture evaluation: dimension mismatch");
    if (state.lambda.size() != state.components || state.marginals.size() != state.components)
        throw std::invalid_argument("mixture evaluation: malformed state");
    for (std::size_t k = 0; k < kernels.size(); ++k)
        if (!kernels[k].grid.same_as(data.grids[k]))
            throw std::invalid_argument("mixture evaluation: kernel grid differs from data grid");
}

}  // namespace

NhTable make_nh_table(const MixtureState& state, const std::vector<KernelMatrix>& kernels) {
    NhTable nh(state.components);
    for (std::size_t j = 0; j < state.components; ++j) {
        nh[j].resize(state.dimension);
        for (std::size_t k = 0; k < state.dimension; ++k)
            nh[j][k] = nonlinear_smooth_1d(kernels[k], state.marginals[j][k]).values;
    }
    return nh;
}

double discrete_objective_with(const NhTable& nh, const MixtureState& state,
                               const BinnedDataset& data) {
    double log_sum = 0.0;
    for (std::size_t i = 0; i < data.count; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < state.components; ++j) {
            double v = state.lambda[j];
            for (std::size_t k = 0; k < state.dimension; ++k) v *= nh[j][k][data.bins[i][k]];
            s += v;
        }
        if (!(s > 0.0)) throw std::domain_error("discrete_objective: vanishing mixture value at an observation");
        log_sum += std::log(s);
    }
    double mass = 0.0;
    for (double l : state.lambda) mass += l;
    return -log_sum / static_cast<double>(data.count) + mass;
}

double discrete_objective(const MixtureState& state, const BinnedDataset& data,
                          const std::vector<KernelMatrix>& kernels) {
    require_consistent(state, data, kernels);
    return discrete_objective_with(make_nh_table(state, kernels), state, data);
}

RescaleCheck rescale_optimality_check(const MixtureState& state, const BinnedDataset& data,
                                      const std::vector<KernelMatrix>& kernels) {
    require_consistent(state, data, kernels);
    double mass = 0.0;
    for (double l : state.lambda) mass += l;
    if (!(mass > 0.0)) throw std::invalid_argument("rescale_optimality_check: nonpositive total mass");

    RescaleCheck check;
    check.alpha_hat = 1.0 / mass;
    check.alphas = {0.5, 1.0, 2.0, 0.5 * check.alpha_hat, check.alpha_hat, 2.0 * check.alpha_hat};
    std::sort(check.alphas.begin(), check.alphas.end());
    check.alphas.erase(std::unique(check.alphas.begin(), check.alphas.end()), check.alphas.end());

    const NhTable nh = make_nh_table(state, kernels);
    MixtureState scaled = state;
    double best_other = std::numeric_limits<double>::infinity();
    for (double alpha : check.alphas) {
        for (std::size_t j = 0; j < state.components; ++j) scaled.lambda[j] = alpha * state.lambda[j];
        const double obj = discrete_objective_with(nh, scaled, data);
        check.objectives.push_back(obj);
        if (alpha == check.alpha_hat)
            check.objective_at_alpha_hat = obj;
        else
            best_other = std::min(best_other, obj);
    }
    check.optimal_at_alpha_hat = check.objective_at_alpha_hat <= best_other + 1e-12;
    return check;
}

}  // namespace nsmm
