#include "nsmm/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nsmm::oracle {

namespace {

void require_kernels(const TensorField& f, const std::vector<KernelMatrix>& kernels) {
    if (kernels.size() != f.rank())
        throw std::invalid_argument("oracle: one kernel per tensor axis required");
    for (std::size_t k = 0; k < kernels.size(); ++k)
        if (!kernels[k].grid.same_as(f.grid(k)))
            throw std::invalid_argument("oracle: kernel grid differs from tensor grid");
}

/// Applies a 1-D kernel transform along one axis, line by line.
TensorField axis_apply(const TensorField& f, const KernelMatrix& kern, std::size_t axis,
                       bool adjoint) {
    const std::size_t cells = kern.size();
    TensorField out(f.grids());
    std::vector<std::size_t> extents;
    for (std::size_t k = 0; k < f.rank(); ++k) extents.push_back(f.extent(k));
    extents[axis] = 1;

    std::vector<double> line(cells), smoothed(cells);
    std::vector<std::size_t> pos(f.rank());
    for_each_index(extents, [&](std::span<const std::size_t> idx) {
        for (std::size_t k = 0; k < f.rank(); ++k) pos[k] = idx[k];
        for (std::size_t g = 0; g < cells; ++g) {
            pos[axis] = g;
            line[g] = f.at(pos);
        }
        for (std::size_t g = 0; g < cells; ++g) {
            double acc = 0.0;
            for (std::size_t gp = 0; gp < cells; ++gp)
                acc += (adjoint ? kern.at(gp, g) : kern.at(g, gp)) * line[gp];
            smoothed[g] = acc * kern.grid.delta;
        }
        for (std::size_t g = 0; g < cells; ++g) {
            pos[axis] = g;
            out.at(pos) = smoothed[g];
        }
    });
    return out;
}

}  // namespace

TensorField tensor_smooth(const TensorField& f, const std::vector<KernelMatrix>& kernels) {
    require_kernels(f, kernels);
    TensorField out = f;
    for (std::size_t axis = 0; axis < f.rank(); ++axis)
        out = axis_apply(out, kernels[axis], axis, /*adjoint=*/false);
    return out;
}

TensorField tensor_adjoint_smooth(const TensorField& f, const std::vector<KernelMatrix>& kernels) {
    require_kernels(f, kernels);
    TensorField out = f;
    for (std::size_t axis = 0; axis < f.rank(); ++axis)
        out = axis_apply(out, kernels[axis], axis, /*adjoint=*/true);
    return out;
}

TensorField tensor_nonlinear_smooth(const TensorField& f, const std::vector<KernelMatrix>& kernels) {
    require_kernels(f, kernels);
    TensorField logf(f.grids());
    for (std::size_t c = 0; c < f.cell_count(); ++c) {
        const double v = f.values()[c];
        if (!(v > 0.0))
            throw std::domain_error("tensor_nonlinear_smooth: input must be strictly positive");
        logf.values()[c] = std::log(v);
    }
    TensorField out = tensor_adjoint_smooth(logf, kernels);
    for (double& v : out.values()) v = std::exp(v);
    return out;
}

double check_commutativity(const TensorField& f, const std::vector<KernelMatrix>& kernels) {
    require_kernels(f, kernels);
    const TensorField lhs = project_multiply(tensor_smooth(f, kernels));
    const TensorField rhs = tensor_smooth(project_multiply(f), kernels);
    double gap = 0.0;
    for (std::size_t c = 0; c < f.cell_count(); ++c)
        gap = std::max(gap, std::abs(lhs.values()[c] - rhs.values()[c]));
    return gap;
}

TensorField assemble_component(const MixtureState& state, std::size_t j) {
    if (j >= state.components) throw std::invalid_argument("assemble_component: index out of range");
    std::vector<Grid1D> grids;
    for (const auto& f : state.marginals[j]) grids.push_back(f.grid);
    TensorField out(grids);
    std::vector<std::size_t> extents;
    for (const auto& g : grids) extents.push_back(g.cells);
    for_each_index(extents, [&](std::span<const std::size_t> idx) {
        double v = state.lambda[j];
        for (std::size_t k = 0; k < idx.size(); ++k) v *= state.marginals[j][k].values[idx[k]];
        out.at(idx) = v;
    });
    return out;
}

GridDensity make_grid_density(TensorField field) {
    const double mass = total_mass(field);
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::invalid_argument("make_grid_density: total mass " + std::to_string(mass) +
                                    " is not 1");
    for (double v : field.values())
        if (v < 0.0) throw std::invalid_argument("make_grid_density: negative cell");
    return GridDensity{std::move(field)};
}

GridDensity empirical_density(const BinnedDataset& data) {
    TensorField field(data.grids);
    const double atom = 1.0 / (static_cast<double>(data.count) * field.cell_volume());
    for (std::size_t i = 0; i < data.count; ++i) field.at(data.bins[i]) += atom;
    return make_grid_density(std::move(field));
}

double tensor_discrete_objective(const MixtureState& state, const BinnedDataset& data,
                                 const std::vector<KernelMatrix>& kernels) {
    double mass_term = 0.0;
    std::vector<TensorField> nh;
    nh.reserve(state.components);
    for (std::size_t j = 0; j < state.components; ++j) {
        TensorField e = assemble_component(state, j);
        mass_term += total_mass(e);
        nh.push_back(tensor_nonlinear_smooth(e, kernels));
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < data.count; ++i) {
        double s = 0.0;
        for (const auto& t : nh) s += t.at(data.bins[i]);
        log_sum += std::log(s);
    }
    return -log_sum / static_cast<double>(data.count) + mass_term;
}

std::vector<std::vector<double>> tensor_posterior_weights(const MixtureState& state,
                                                          const BinnedDataset& data,
                                                          const std::vector<KernelMatrix>& kernels) {
    std::vector<TensorField> nh;
    nh.reserve(state.components);
    for (std::size_t j = 0; j < state.components; ++j)
        nh.push_back(tensor_nonlinear_smooth(assemble_component(state, j), kernels));
    std::vector<std::vector<double>> w(data.count, std::vector<double>(state.components, 0.0));
    for (std::size_t i = 0; i < data.count; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < state.components; ++j) {
            w[i][j] = nh[j].at(data.bins[i]);
            sum += w[i][j];
        }
        for (std::size_t j = 0; j < state.components; ++j) w[i][j] /= sum;
    }
    return w;
}

namespace {

double objective_from_pieces(const GridDensity& g, const std::vector<TensorField>& nh,
                             double mass_term) {
    const TensorField& gf = g.field;
    const double vol = gf.cell_volume();
    double acc = 0.0;
    for (std::size_t c = 0; c < gf.cell_count(); ++c) {
        const double gv = gf.values()[c];
        if (gv > 0.0) {
            double s = 0.0;
            for (const auto& t : nh) s += t.values()[c];
            acc += gv * std::log(gv / s);
        }
    }
    return acc * vol + mass_term;
}

}  // namespace

double grid_truth_objective(const GridDensity& g, const MixtureState& state,
                            const std::vector<KernelMatrix>& kernels) {
    std::vector<TensorField> nh;
    double mass_term = 0.0;
    for (std::size_t j = 0; j < state.components; ++j) {
        TensorField e = assemble_component(state, j);
        mass_term += total_mass(e);
        nh.push_back(tensor_nonlinear_smooth(e, kernels));
    }
    return objective_from_pieces(g, nh, mass_term);
}

GridTruthStep grid_truth_nsmm_step(const GridDensity& g, const MixtureState& state,
                                   const std::vector<KernelMatrix>& kernels) {
    const std::size_t m = state.components;
    const std::size_t r = state.dimension;
    require_kernels(g.field, kernels);
    if (r != g.field.rank()) throw std::invalid_argument("grid_truth_nsmm_step: rank mismatch");

    std::vector<TensorField> e_prev;
    std::vector<TensorField> nh_prev;
    double mass_prev = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        e_prev.push_back(assemble_component(state, j));
        mass_prev += total_mass(e_prev.back());
        nh_prev.push_back(tensor_nonlinear_smooth(e_prev.back(), kernels));
    }
    const double l_prev = objective_from_pieces(g, nh_prev, mass_prev);

    // posterior weights of the current state, as full tensors
    std::vector<TensorField> gw(m, TensorField(g.field.grids()));
    for (std::size_t c = 0; c < g.field.cell_count(); ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += nh_prev[j].values()[c];
        for (std::size_t j = 0; j < m; ++j)
            gw[j].values()[c] = g.field.values()[c] * (nh_prev[j].values()[c] / s);
    }

    // one-step update through the projection-multiplication representation
    MixtureState next;
    next.components = m;
    next.dimension = r;
    next.lambda.resize(m);
    next.marginals.assign(m, std::vector<GridFunction1D>(r));
    std::vector<TensorField> e_next;
    double gmap_gap = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        TensorField smoothed = tensor_smooth(gw[j], kernels);
        TensorField updated = project_multiply(smoothed);
        const double lam = total_mass(updated);
        next.lambda[j] = lam;
        for (std::size_t k = 0; k < r; ++k) {
            std::vector<double> marg = axis_marginal(updated, k);
            for (double& v : marg) v /= lam;
            next.marginals[j][k] = GridFunction1D{updated.grid(k), std::move(marg)};
        }

        // the factorized minimization formula must coincide with P(S(g w_j))
        const double t_j = total_mass(gw[j]);
        std::vector<std::vector<double>> factors(r);
        for (std::size_t k = 0; k < r; ++k) {
            GridFunction1D mk{gw[j].grid(k), axis_marginal(gw[j], k)};
            factors[k] = smooth_1d(kernels[k], mk).values;
        }
        double denom = 1.0;
        for (std::size_t k = 0; k + 1 < r; ++k) denom *= t_j;
        std::vector<std::size_t> extents;
        for (std::size_t k = 0; k < r; ++k) extents.push_back(updated.extent(k));
        for_each_index(extents, [&](std::span<const std::size_t> idx) {
            double v = 1.0;
            for (std::size_t k = 0; k < r; ++k) v *= factors[k][idx[k]];
            gmap_gap = std::max(gmap_gap, std::abs(v / denom - updated.at(idx)));
        });
        e_next.push_back(std::move(updated));
    }

    std::vector<TensorField> nh_next;
    double mass_next = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        mass_next += total_mass(e_next[j]);
        nh_next.push_back(tensor_nonlinear_smooth(e_next[j], kernels));
    }
    const double l_next = objective_from_pieces(g, nh_next, mass_next);

    std::vector<TensorField> gw_next(m, TensorField(g.field.grids()));
    for (std::size_t c = 0; c < g.field.cell_count(); ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += nh_next[j].values()[c];
        for (std::size_t j = 0; j < m; ++j)
            gw_next[j].values()[c] = g.field.values()[c] * (nh_next[j].values()[c] / s);
    }

    GridTruthStep step{std::move(next), DescentReport{}, gmap_gap};
    DescentReport& rep = step.report;
    rep.objective = l_next;
    rep.decrease = l_prev - l_next;
    for (std::size_t j = 0; j < m; ++j) {
        rep.kl_components += generalized_kl(e_next[j], e_prev[j]);
        rep.kl_weights += generalized_kl(gw[j], gw_next[j]);
    }
    rep.identity_gap = std::abs(rep.decrease - rep.kl_components - rep.kl_weights);
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double d = l1_distance(e_next[j], e_prev[j]);
        rep.fixed_point_residual = std::max(rep.fixed_point_residual, d);
        sum_sq += d * d;
    }
    rep.l1_bound_slack = rep.decrease - 0.25 * sum_sq;
    rep.lower_bound_margin = l_next - total_mass(g.field);
    return step;
}

RegularityReport check_iterate_regularity(const MixtureState& state,
                                          const std::vector<KernelMatrix>& kernels) {
    const std::size_t r = state.dimension;
    if (kernels.size() != r) throw std::invalid_argument("check_iterate_regularity: kernel count");
    RegularityReport rep;
    rep.sup_limit = 1.0;
    for (const auto& k : kernels) rep.sup_limit *= k.max_value;

    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < state.components; ++j) {
        const TensorField e = assemble_component(state, j);
        for (double v : e.values()) rep.sup_value = std::max(rep.sup_value, v);

        std::vector<std::size_t> extents;
        for (std::size_t k = 0; k < r; ++k) extents.push_back(e.extent(k));
        for (std::size_t axis = 0; axis < r; ++axis) {
            double limit = kernels[axis].slope_bound;
            for (std::size_t k = 0; k < r; ++k)
                if (k != axis) limit *= kernels[k].max_value;
            const double delta = e.grid(axis).delta;

            std::vector<std::size_t> ext = extents;
            ext[axis] -= 1;  // adjacent pairs along this axis
            std::vector<std::size_t> hi(r);
            for_each_index(ext, [&](std::span<const std::size_t> idx) {
                for (std::size_t k = 0; k < r; ++k) hi[k] = idx[k];
                hi[axis] += 1;
                const double slope = std::abs(e.at(hi) - e.at(idx)) / delta;
                worst_excess = std::max(worst_excess, slope - limit);
            });
        }
    }
    rep.worst_slope_excess = worst_excess;
    rep.sup_ok = rep.sup_value <= rep.sup_limit * (1.0 + 1e-10);
    rep.slope_ok = rep.worst_slope_excess <= 1e-10;
    return rep;
}

}  // namespace nsmm::oracle
