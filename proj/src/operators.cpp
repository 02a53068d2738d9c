#include "nsmm/operators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nsmm {

namespace {

void require_same_grid(const KernelMatrix& kernel, const GridFunction1D& f, const char* who) {
    if (!kernel.grid.same_as(f.grid) || f.values.size() != kernel.grid.cells)
        throw std::invalid_argument(std::string(who) + ": kernel and function grids differ");
}

}  // namespace

GridFunction1D smooth_1d(const KernelMatrix& kernel, const GridFunction1D& f) {
    require_same_grid(kernel, f, "smooth_1d");
    const std::size_t n = kernel.size();
    GridFunction1D out{f.grid, std::vector<double>(n, 0.0)};
    for (std::size_t g = 0; g < n; ++g) {
        double acc = 0.0;
        const double* row = &kernel.values[g * n];
        for (std::size_t gp = 0; gp < n; ++gp) acc += row[gp] * f.values[gp];
        out.values[g] = acc * f.grid.delta;
    }
    return out;
}

GridFunction1D adjoint_smooth_1d(const KernelMatrix& kernel, const GridFunction1D& f) {
    require_same_grid(kernel, f, "adjoint_smooth_1d");
    const std::size_t n = kernel.size();
    GridFunction1D out{f.grid, std::vector<double>(n, 0.0)};
    for (std::size_t g = 0; g < n; ++g) {
        double acc = 0.0;
        for (std::size_t gp = 0; gp < n; ++gp) acc += kernel.values[gp * n + g] * f.values[gp];
        out.values[g] = acc * f.grid.delta;
    }
    return out;
}

GridFunction1D nonlinear_smooth_1d(const KernelMatrix& kernel, const GridFunction1D& f) {
    require_same_grid(kernel, f, "nonlinear_smooth_1d");
    const std::size_t n = kernel.size();
    std::vector<double> logf(n);
    for (std::size_t g = 0; g < n; ++g) {
        if (!(f.values[g] > 0.0))
            throw std::domain_error("nonlinear_smooth_1d: input must be strictly positive on every cell");
        logf[g] = std::log(f.values[g]);
    }
    GridFunction1D out{f.grid, std::vector<double>(n, 0.0)};
    for (std::size_t g = 0; g < n; ++g) {
        double acc = 0.0;
        for (std::size_t gp = 0; gp < n; ++gp) acc += kernel.values[gp * n + g] * logf[gp];
        out.values[g] = std::exp(acc * f.grid.delta);
    }
    return out;
}

double nh_component_at(const std::vector<KernelMatrix>& kernels, double theta,
                       const std::vector<GridFunction1D>& marginals,
                       std::span<const std::size_t> cell) {
    if (!(theta > 0.0)) throw std::invalid_argument("nh_component_at: theta must be positive");
    if (marginals.size() != kernels.size() || cell.size() != kernels.size())
        throw std::invalid_argument("nh_component_at: dimension mismatch");
    double value = theta;
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        const GridFunction1D nh = nonlinear_smooth_1d(kernels[k], marginals[k]);
        if (cell[k] >= nh.values.size()) throw std::invalid_argument("nh_component_at: cell out of range");
        value *= nh.values[cell[k]];
    }
    return value;
}

TensorField::TensorField(std::vector<Grid1D> grids) : grids_(std::move(grids)) {
    if (grids_.empty() || grids_.size() > 3)
        throw std::invalid_argument("TensorField: rank must be between 1 and 3");
    strides_.assign(grids_.size(), 1);
    std::size_t count = 1;
    for (std::size_t axis = grids_.size(); axis-- > 0;) {
        strides_[axis] = count;
        count *= grids_[axis].cells;
    }
    values_.assign(count, 0.0);
}

double TensorField::cell_volume() const {
    double v = 1.0;
    for (const auto& g : grids_) v *= g.delta;
    return v;
}

std::size_t TensorField::offset(std::span<const std::size_t> idx) const {
    std::size_t off = 0;
    for (std::size_t axis = 0; axis < grids_.size(); ++axis) off += idx[axis] * strides_[axis];
    return off;
}

bool TensorField::same_shape(const TensorField& other) const {
    if (grids_.size() != other.grids_.size()) return false;
    for (std::size_t axis = 0; axis < grids_.size(); ++axis)
        if (!grids_[axis].same_as(other.grids_[axis])) return false;
    return true;
}

void for_each_index(std::span<const std::size_t> extents,
                    const std::function<void(std::span<const std::size_t>)>& fn) {
    std::vector<std::size_t> idx(extents.size(), 0);
    for (;;) {
        fn(idx);
        std::size_t axis = extents.size();
        while (axis-- > 0) {
            if (++idx[axis] < extents[axis]) break;
            idx[axis] = 0;
            if (axis == 0) return;
        }
    }
}

double total_mass(const TensorField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.cell_volume();
}

std::vector<double> axis_marginal(const TensorField& f, std::size_t axis) {
    if (axis >= f.rank()) throw std::invalid_argument("axis_marginal: axis out of range");
    std::vector<double> out(f.extent(axis), 0.0);
    const double weight = f.cell_volume() / f.grid(axis).delta;
    std::vector<std::size_t> extents;
    for (std::size_t k = 0; k < f.rank(); ++k) extents.push_back(f.extent(k));
    for_each_index(extents, [&](std::span<const std::size_t> idx) {
        out[idx[axis]] += f.at(idx);
    });
    for (double& v : out) v *= weight;
    return out;
}

TensorField project_multiply(const TensorField& f) {
    const double mass = total_mass(f);
    if (!(mass > 0.0)) throw std::invalid_argument("project_multiply: total mass must be positive");
    const std::size_t r = f.rank();
    std::vector<std::vector<double>> marginals;
    marginals.reserve(r);
    for (std::size_t axis = 0; axis < r; ++axis) marginals.push_back(axis_marginal(f, axis));
    double denom = 1.0;
    for (std::size_t k = 0; k + 1 < r; ++k) denom *= mass;

    TensorField out(f.grids());
    std::vector<std::size_t> extents;
    for (std::size_t k = 0; k < r; ++k) extents.push_back(f.extent(k));
    for_each_index(extents, [&](std::span<const std::size_t> idx) {
        double v = 1.0;
        for (std::size_t k = 0; k < r; ++k) v *= marginals[k][idx[k]];
        out.at(idx) = v / denom;
    });
    return out;
}

namespace {

double generalized_kl_span(std::span<const double> f1, std::span<const double> f2,
                           double cell_volume) {
    if (f1.size() != f2.size()) throw std::invalid_argument("generalized_kl: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) {
        const double a = f1[i];
        const double b = f2[i];
        if (a < 0.0 || b < 0.0) throw std::invalid_argument("generalized_kl: inputs must be nonnegative");
        if (a == 0.0) {
            acc += b;
        } else if (b == 0.0) {
            return std::numeric_limits<double>::infinity();
        } else {
            acc += a * std::log(a / b) + b - a;
        }
    }
    return acc * cell_volume;
}

double l1_span(std::span<const double> f1, std::span<const double> f2, double cell_volume) {
    if (f1.size() != f2.size()) throw std::invalid_argument("l1_distance: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) acc += std::abs(f1[i] - f2[i]);
    return acc * cell_volume;
}

}  // namespace

double generalized_kl(const GridFunction1D& f1, const GridFunction1D& f2) {
    if (!f1.grid.same_as(f2.grid)) throw std::invalid_argument("generalized_kl: grid mismatch");
    return generalized_kl_span(f1.values, f2.values, f1.grid.delta);
}

double generalized_kl(const TensorField& f1, const TensorField& f2) {
    if (!f1.same_shape(f2)) throw std::invalid_argument("generalized_kl: shape mismatch");
    return generalized_kl_span(f1.values(), f2.values(), f1.cell_volume());
}

double l1_distance(const GridFunction1D& f1, const GridFunction1D& f2) {
    if (!f1.grid.same_as(f2.grid)) throw std::invalid_argument("l1_distance: grid mismatch");
    return l1_span(f1.values, f2.values, f1.grid.delta);
}

double l1_distance(const TensorField& f1, const TensorField& f2) {
    if (!f1.same_shape(f2)) throw std::invalid_argument("l1_distance: shape mismatch");
    return l1_span(f1.values(), f2.values(), f1.cell_volume());
}

}  // namespace nsmm
