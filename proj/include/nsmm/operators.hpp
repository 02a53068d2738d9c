#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nsmm/grid_kernel.hpp"

namespace nsmm {

/// Nonnegative function sampled on a 1-D grid.
struct GridFunction1D {
    Grid1D grid;
    std::vector<double> values;
};

/// (S f)[g] = delta * sum_g' K[g][g'] f[g'].  Mass preserving (column marginal).
GridFunction1D smooth_1d(const KernelMatrix& kernel, const GridFunction1D& f);

/// (S* f)[g] = delta * sum_g' K[g'][g] f[g'].  Mass preserving (row marginal).
GridFunction1D adjoint_smooth_1d(const KernelMatrix& kernel, const GridFunction1D& f);

/// (N f)[g] = exp(delta * sum_g' K[g'][g] log f[g']).
/// Requires f strictly positive on every cell; throws std::domain_error otherwise.
/// Output mass never exceeds the adjoint-smoothed mass (Jensen).
GridFunction1D nonlinear_smooth_1d(const KernelMatrix& kernel, const GridFunction1D& f);

/// theta * prod_k (N marginals[k])[cell[k]]: the product-form value of the
/// nonlinear smoother at one multi-index, never assembling the full tensor.
double nh_component_at(const std::vector<KernelMatrix>& kernels, double theta,
                       const std::vector<GridFunction1D>& marginals,
                       std::span<const std::size_t> cell);

/// Dense r-dimensional gridded function, row-major storage.
/// Capped at r <= 3: this type exists for brute-force reference paths only.
class TensorField {
  public:
    explicit TensorField(std::vector<Grid1D> grids);

    std::size_t rank() const { return grids_.size(); }
    const Grid1D& grid(std::size_t axis) const { return grids_[axis]; }
    const std::vector<Grid1D>& grids() const { return grids_; }
    std::size_t extent(std::size_t axis) const { return grids_[axis].cells; }
    std::size_t cell_count() const { return values_.size(); }
    double cell_volume() const;

    std::size_t offset(std::span<const std::size_t> idx) const;
    double at(std::span<const std::size_t> idx) const { return values_[offset(idx)]; }
    double& at(std::span<const std::size_t> idx) { return values_[offset(idx)]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const TensorField& other) const;

  private:
    std::vector<Grid1D> grids_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

/// Visits every multi-index of the given extents in row-major order.
void for_each_index(std::span<const std::size_t> extents,
                    const std::function<void(std::span<const std::size_t>)>& fn);

double total_mass(const TensorField& f);

/// Integrates out every axis except `axis`; result has length extent(axis)
/// and the same quadrature mass as f.
std::vector<double> axis_marginal(const TensorField& f, std::size_t axis);

/// Product of the function's own marginals, scaled so total mass is preserved:
/// (P f)(x) = prod_k marginal_k(x_k) / mass^(r-1).  Idempotent; fixes products.
TensorField project_multiply(const TensorField& f);

/// Generalized Kullback-Leibler divergence sum [f1 log(f1/f2) + f2 - f1] * volume.
/// Cells with f1 = 0 contribute f2 (the 0 log 0 = 0 convention); a cell with
/// f1 > 0 and f2 = 0 makes the result +infinity.
double generalized_kl(const GridFunction1D& f1, const GridFunction1D& f2);
double generalized_kl(const TensorField& f1, const TensorField& f2);

/// Quadrature of |f1 - f2|.
double l1_distance(const GridFunction1D& f1, const GridFunction1D& f2);
double l1_distance(const TensorField& f1, const TensorField& f2);

}  // namespace nsmm
