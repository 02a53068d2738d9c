#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "nsmm/engine.hpp"
#include "nsmm/mixture.hpp"
#include "nsmm/oracle.hpp"
#include "nsmm/rng.hpp"

using namespace nsmm;

namespace {

GridFunction1D random_density(const Grid1D& grid, rng::Engine& eng) {
    GridFunction1D f{grid, std::vector<double>(grid.cells)};
    for (double& v : f.values) v = eng.uniform01() + 1e-3;
    const double mass = quadrature(grid, f.values);
    for (double& v : f.values) v /= mass;
    return f;
}

MixtureState random_state(const std::vector<Grid1D>& grids, std::size_t m, rng::Engine& eng) {
    MixtureState state;
    state.components = m;
    state.dimension = grids.size();
    state.lambda.assign(m, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        state.lambda[j] = eng.uniform01() + 0.2;
        total += state.lambda[j];
    }
    for (double& l : state.lambda) l /= total;
    state.marginals.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        for (const auto& g : grids) state.marginals[j].push_back(random_density(g, eng));
    return state;
}

std::vector<std::vector<double>> draw_rows(const std::vector<Grid1D>& grids, std::size_t n,
                                             rng::Engine& eng) {
    std::vector<std::vector<double>> raw(n, std::vector<double>(grids.size()));
    for (auto& row : raw)
        for (std::size_t k = 0; k < grids.size(); ++k)
            row[k] = grids[k].a + (grids[k].b - grids[k].a) * eng.uniform01();
    return raw;
}

}  // namespace

TEST_CASE("bin_dataset maps to nearest midpoints with ties rounding down") {
    const std::vector<Grid1D> grids{build_grid(0.0, 1.0, 4)};
    CHECK(bin_dataset({{0.1}}, grids).bins[0][0] == 0);
    CHECK(bin_dataset({{0.25}}, grids).bins[0][0] == 0);  // boundary tie
    CHECK(bin_dataset({{0.26}}, grids).bins[0][0] == 1);
    CHECK(bin_dataset({{0.0}}, grids).bins[0][0] == 0);
    CHECK(bin_dataset({{1.0}}, grids).bins[0][0] == 3);
    CHECK(bin_dataset({{0.875}}, grids).bins[0][0] == 3);
    CHECK_THROWS_AS(bin_dataset({{1.2}}, grids), std::invalid_argument);
    CHECK_THROWS_AS(bin_dataset({{-0.1}}, grids), std::invalid_argument);
}

TEST_CASE("bin_dataset error names the row and coordinate") {
    const std::vector<Grid1D> grids{build_grid(0.0, 1.0, 4), build_grid(0.0, 1.0, 4)};
    try {
        bin_dataset({{0.5, 0.5}, {0.5, 1.2}}, grids);
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("coordinate 1") != std::string::npos);
    }
}

TEST_CASE("discrete objective analytic cases with the uniform kernel") {
    const Grid1D g = build_grid(0.0, 1.0, 16);
    const std::vector<Grid1D> grids{g, g};
    const std::vector<KernelMatrix> kernels{build_kernel(g, 0.2, KernelFamily::uniform),
                                            build_kernel(g, 0.2, KernelFamily::uniform)};
    rng::Engine eng(11);
    const BinnedDataset data = bin_dataset(draw_rows(grids, 20, eng), grids);

    MixtureState state;
    state.components = 1;
    state.dimension = 2;
    state.lambda = {1.0};
    state.marginals = {{GridFunction1D{g, std::vector<double>(16, 1.0)},
                        GridFunction1D{g, std::vector<double>(16, 1.0)}}};
    CHECK(discrete_objective(state, data, kernels) == 1.0);

    state.lambda = {2.0};
    CHECK(discrete_objective(state, data, kernels) ==
          doctest::Approx(2.0 - std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("discrete objective matches the full-tensor oracle") {
    const Grid1D g = build_grid(0.0, 1.0, 8);
    const std::vector<Grid1D> grids{g, g};
    const std::vector<KernelMatrix> kernels{build_kernel(g, 0.25, KernelFamily::gaussian),
                                            build_kernel(g, 0.18, KernelFamily::gaussian)};
    rng::Engine eng(12);
    const BinnedDataset data = bin_dataset(draw_rows(grids, 15, eng), grids);
    for (int trial = 0; trial < 5; ++trial) {
        const MixtureState state = random_state(grids, 2, eng);
        const double fast = discrete_objective(state, data, kernels);
        const double slow = oracle::tensor_discrete_objective(state, data, kernels);
        CHECK(std::abs(fast - slow) < 1e-10);
    }
}

TEST_CASE("discrete objective dominates the kernel lower bound") {
    const Grid1D g = build_grid(0.0, 1.0, 12);
    const std::vector<Grid1D> grids{g, g};
    const std::vector<KernelMatrix> kernels{build_kernel(g, 0.1, KernelFamily::gaussian),
                                            build_kernel(g, 0.3, KernelFamily::epanechnikov_floored)};
    double bound = 0.0;
    for (const auto& k : kernels) bound -= std::log(k.max_value);

    rng::Engine eng(13);
    const BinnedDataset data = bin_dataset(draw_rows(grids, 25, eng), grids);
    for (int trial = 0; trial < 20; ++trial) {
        const MixtureState state = random_state(grids, 1 + trial % 3, eng);
        CHECK(discrete_objective(state, data, kernels) >= bound - 1e-10);
    }
}

TEST_CASE("rescale check finds the optimum at 1/sum(lambda)") {
    const Grid1D g = build_grid(0.0, 1.0, 16);
    const std::vector<Grid1D> grids{g};
    const std::vector<KernelMatrix> kernels{build_kernel(g, 0.2, KernelFamily::gaussian)};
    rng::Engine eng(14);
    const BinnedDataset data = bin_dataset(draw_rows(grids, 30, eng), grids);

    MixtureState unit = random_state(grids, 2, eng);  // masses sum to 1
    RescaleCheck check = rescale_optimality_check(unit, data, kernels);
    CHECK(check.alpha_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(check.optimal_at_alpha_hat);

    MixtureState doubled = unit;
    for (double& l : doubled.lambda) l *= 2.0;
    check = rescale_optimality_check(doubled, data, kernels);
    CHECK(check.alpha_hat == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(check.optimal_at_alpha_hat);

    // m=1 uniform: objective(alpha) = alpha - log(alpha), minimized at 1
    const std::vector<KernelMatrix> flat{build_kernel(g, 0.2, KernelFamily::uniform)};
    MixtureState one;
    one.components = 1;
    one.dimension = 1;
    one.lambda = {1.0};
    one.marginals = {{GridFunction1D{g, std::vector<double>(16, 1.0)}}};
    check = rescale_optimality_check(one, data, flat);
    CHECK(check.optimal_at_alpha_hat);
    for (std::size_t i = 0; i < check.alphas.size(); ++i)
        CHECK(check.objectives[i] ==
              doctest::Approx(check.alphas[i] - std::log(check.alphas[i])).epsilon(1e-12));
}
