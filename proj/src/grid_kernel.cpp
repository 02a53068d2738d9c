#include "nsmm/grid_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsmm {

Grid1D build_grid(double a, double b, std::size_t cells) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("build_grid: bounds must be finite");
    if (!(a < b)) throw std::invalid_argument("build_grid: require a < b");
    if (cells < 2) throw std::invalid_argument("build_grid: require at least 2 cells");
    Grid1D g;
    g.a = a;
    g.b = b;
    g.cells = cells;
    g.delta = (b - a) / static_cast<double>(cells);
    g.midpoints.resize(cells);
    for (std::size_t i = 0; i < cells; ++i)
        g.midpoints[i] = a + (static_cast<double>(i) + 0.5) * g.delta;
    return g;
}

double quadrature(const Grid1D& grid, const std::vector<double>& values) {
    if (values.size() != grid.cells)
        throw std::invalid_argument("quadrature: length mismatch with grid");
    double s = 0.0;
    for (double v : values) s += v;
    return grid.delta * s;
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "epanechnikov-floored") return KernelFamily::epanechnikov_floored;
    if (name == "uniform") return KernelFamily::uniform;
    throw std::invalid_argument("unknown kernel family: " + name);
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::epanechnikov_floored: return "epanechnikov-floored";
        case KernelFamily::uniform: return "uniform";
    }
    return "?";
}

namespace {

double profile_value(KernelFamily family, double t) {
    switch (family) {
        case KernelFamily::gaussian: return std::exp(-0.5 * t * t);
        case KernelFamily::epanechnikov_floored: return std::max(0.0, 1.0 - t * t);
        case KernelFamily::uniform: return 1.0;
    }
    return 0.0;
}

}  // namespace

double max_marginal_deviation(const Grid1D& grid, const std::vector<double>& values) {
    const std::size_t n = grid.cells;
    double worst = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
        double row = 0.0;
        double col = 0.0;
        for (std::size_t gp = 0; gp < n; ++gp) {
            row += values[g * n + gp];
            col += values[gp * n + g];
        }
        worst = std::max(worst, std::abs(row * grid.delta - 1.0));
        worst = std::max(worst, std::abs(col * grid.delta - 1.0));
    }
    return worst;
}

double sinkhorn_sweep(const Grid1D& grid, std::vector<double>& values) {
    const std::size_t n = grid.cells;
    for (std::size_t g = 0; g < n; ++g) {
        double row = 0.0;
        for (std::size_t gp = 0; gp < n; ++gp) row += values[g * n + gp];
        const double scale = 1.0 / (row * grid.delta);
        for (std::size_t gp = 0; gp < n; ++gp) values[g * n + gp] *= scale;
    }
    for (std::size_t gp = 0; gp < n; ++gp) {
        double col = 0.0;
        for (std::size_t g = 0; g < n; ++g) col += values[g * n + gp];
        const double scale = 1.0 / (col * grid.delta);
        for (std::size_t g = 0; g < n; ++g) values[g * n + gp] *= scale;
    }
    return max_marginal_deviation(grid, values);
}

KernelMatrix build_kernel(const Grid1D& grid, double bandwidth, KernelFamily family) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("build_kernel: bandwidth must be positive");
    if (grid.cells < 2 || grid.midpoints.size() != grid.cells)
        throw std::invalid_argument("build_kernel: malformed grid");

    const std::size_t n = grid.cells;
    KernelMatrix k;
    k.grid = grid;
    k.bandwidth = bandwidth;
    k.family = family;
    k.values.resize(n * n);

    double raw_max = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
        for (std::size_t gp = 0; gp < n; ++gp) {
            const double t = (grid.midpoints[g] - grid.midpoints[gp]) / bandwidth;
            const double v = profile_value(family, t);
            k.values[g * n + gp] = v;
            raw_max = std::max(raw_max, v);
        }
    }
    if (!(raw_max > 0.0)) throw std::runtime_error("build_kernel: profile vanished everywhere");

    // strict positivity floor so compact-support profiles still satisfy min_value > 0
    const double floor = 1e-8 * raw_max;
    for (double& v : k.values) v = std::max(v, floor);

    constexpr double kMarginalTol = 1e-12;
    constexpr int kMaxSweeps = 10000;
    double deviation = max_marginal_deviation(grid, k.values);
    int sweeps = 0;
    while (deviation > kMarginalTol) {
        if (++sweeps > kMaxSweeps)
            throw std::runtime_error(
                "build_kernel: doubly stochastic rescaling did not converge in 10000 sweeps "
                "(degenerate bandwidth?)");
        deviation = sinkhorn_sweep(grid, k.values);
    }

    k.min_value = *std::min_element(k.values.begin(), k.values.end());
    k.max_value = *std::max_element(k.values.begin(), k.values.end());

    double slope = 0.0;
    for (std::size_t g = 0; g + 1 < n; ++g) {
        for (std::size_t gp = 0; gp < n; ++gp) {
            slope = std::max(slope, std::abs(k.values[(g + 1) * n + gp] - k.values[g * n + gp]));
            slope = std::max(slope, std::abs(k.values[gp * n + g + 1] - k.values[gp * n + g]));
        }
    }
    k.slope_bound = slope / grid.delta;
    return k;
}

}  // namespace nsmm
