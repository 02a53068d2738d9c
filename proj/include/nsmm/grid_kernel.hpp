#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nsmm {

/// Midpoint discretization of the closed interval [a, b] into `cells` equal cells.
/// All integrals over [a, b] are realized as midpoint quadrature on this grid.
struct Grid1D {
    double a = 0.0;
    double b = 1.0;
    std::size_t cells = 0;
    double delta = 0.0;             // (b - a) / cells
    std::vector<double> midpoints;  // a + (g + 1/2) * delta

    bool same_as(const Grid1D& other) const {
        return a == other.a && b == other.b && cells == other.cells;
    }
};

Grid1D build_grid(double a, double b, std::size_t cells);

/// delta * sum(values). Exact for constants and (by symmetry) linear integrands.
double quadrature(const Grid1D& grid, const std::vector<double>& values);

enum class KernelFamily { gaussian, epanechnikov_floored, uniform };

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

/// Discretized smoothing kernel on a grid. Entries approximate s_h(mid_g, mid_g')
/// and are rescaled so both quadrature marginals equal one:
///   sum_g' K[g][g'] * delta = sum_g' K[g'][g] * delta = 1  for every g.
/// min_value/max_value/slope_bound are the constants the iterate bounds use;
/// they are measured on the final matrix, not taken from any analytic formula.
struct KernelMatrix {
    Grid1D grid;
    double bandwidth = 0.0;
    KernelFamily family = KernelFamily::gaussian;
    std::vector<double> values;  // row-major, cells x cells
    double min_value = 0.0;      // smallest entry (strictly positive)
    double max_value = 0.0;      // largest entry
    double slope_bound = 0.0;    // max adjacent first-difference slope, rows and columns

    double at(std::size_t g, std::size_t gp) const { return values[g * grid.cells + gp]; }
    std::size_t size() const { return grid.cells; }
};

/// Evaluates the family profile at (mid_g - mid_g')/h, floors the result at
/// 1e-8 * max so every entry stays strictly positive, then runs alternating
/// row/column rescaling (Sinkhorn) until both quadrature marginals are within
/// 1e-12 of one. Throws if that does not happen within 10,000 sweeps.
KernelMatrix build_kernel(const Grid1D& grid, double bandwidth, KernelFamily family);

/// One full row pass followed by one full column pass of the rescaling.
/// Returns the largest marginal deviation after the pass.
double sinkhorn_sweep(const Grid1D& grid, std::vector<double>& values);

/// max over rows and columns of |quadrature sum - 1|.
double max_marginal_deviation(const Grid1D& grid, const std::vector<double>& values);

}  // namespace nsmm
