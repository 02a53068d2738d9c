#include "nsmm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "nsmm/rng.hpp"

namespace nsmm {

namespace {

constexpr double kDescentTol = 1e-10;        // objective may not increase past this
constexpr double kIdentityRelTol = 1e-8;     // decrease == kl_components + kl_weights
constexpr double kL1SlackTol = 1e-8;         // decrease >= quarter sum of squared L1 steps
constexpr double kKlNonnegTol = 1e-12;       // decomposition terms are nonnegative
constexpr double kMarginTol = 1e-10;         // objective lower bound
constexpr double kMassTol = 1e-12;           // sum of lambda after a minimization step
constexpr double kQuadratureTol = 1e-10;     // marginal unit mass
constexpr double kEntryRelTol = 1e-10;       // marginal values inside the kernel range
// beyond this many cells the joint L1 scan switches to marginal-based brackets
constexpr std::size_t kExactScanLimit = std::size_t(1) << 24;

std::string describe(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void require_engine_inputs(const BinnedDataset& data, const std::vector<KernelMatrix>& kernels) {
    if (data.dimension == 0 || data.count == 0) throw std::invalid_argument("fit: empty dataset");
    if (kernels.size() != data.dimension)
        throw std::invalid_argument("fit: one kernel per coordinate required");
    for (std::size_t k = 0; k < kernels.size(); ++k)
        if (!kernels[k].grid.same_as(data.grids[k]))
            throw std::invalid_argument("fit: kernel grid differs from data grid");
}

void validate_weight_rows(const WeightMatrix& w, const char* who) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) {
            const double v = w.at(i, j);
            if (!(v > 0.0))
                throw invariant_violation(std::string(who) + ": responsibility w[" + std::to_string(i) +
                                          "][" + std::to_string(j) +
                                          "] is not strictly positive (Lemma 11)");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kMassTol)
            throw invariant_violation(std::string(who) + ": responsibility row " + std::to_string(i) +
                                      " sums to " + describe(sum) + ", not 1");
    }
}

WeightMatrix weights_from(const NhTable& nh, const MixtureState& state, const BinnedDataset& data) {
    WeightMatrix w;
    w.rows = data.count;
    w.cols = state.components;
    w.values.assign(w.rows * w.cols, 0.0);
    std::vector<double> row(state.components);
    for (std::size_t i = 0; i < data.count; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < state.components; ++j) {
            double v = state.lambda[j];
            for (std::size_t k = 0; k < state.dimension; ++k) v *= nh[j][k][data.bins[i][k]];
            row[j] = v;
            sum += v;
        }
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw invariant_violation("majorization step: smoothed mixture value degenerate at observation " +
                                      std::to_string(i) + " (Lemma 11 positivity)");
        for (std::size_t j = 0; j < state.components; ++j) w.at(i, j) = row[j] / sum;
    }
    validate_weight_rows(w, "majorization step");
    return w;
}

/// L1 distance of two product-form components; exact when the joint grid is
/// small enough to scan, otherwise a [lower, upper] bracket from marginal
/// differences and the telescoped product difference.
struct L1Estimate {
    double lower = 0.0;
    double upper = 0.0;
    bool exact = true;
};

L1Estimate component_l1(double lam1, const std::vector<GridFunction1D>& f1, double lam2,
                        const std::vector<GridFunction1D>& f2) {
    const std::size_t r = f1.size();
    double volume = 1.0;
    std::size_t cells = 1;
    bool overflow = false;
    for (std::size_t k = 0; k < r; ++k) {
        volume *= f1[k].grid.delta;
        if (cells > kExactScanLimit / std::max<std::size_t>(f1[k].grid.cells, 1)) overflow = true;
        cells *= f1[k].grid.cells;
    }

    if (!overflow && r > 3 && cells <= (std::size_t(1) << 20)) {
        // generic odometer scan for higher-dimensional states on small grids
        std::vector<std::size_t> idx(r, 0);
        double acc = 0.0;
        for (;;) {
            double p1 = lam1, p2 = lam2;
            for (std::size_t k = 0; k < r; ++k) {
                p1 *= f1[k].values[idx[k]];
                p2 *= f2[k].values[idx[k]];
            }
            acc += std::abs(p1 - p2);
            std::size_t axis = r;
            while (axis-- > 0) {
                if (++idx[axis] < f1[axis].grid.cells) break;
                idx[axis] = 0;
                if (axis == 0) {
                    const double v = acc * volume;
                    return {v, v, true};
                }
            }
        }
    }

    if (!overflow && cells <= kExactScanLimit && r <= 3) {
        double acc = 0.0;
        if (r == 1) {
            const auto& a = f1[0].values;
            const auto& b = f2[0].values;
            for (std::size_t g = 0; g < a.size(); ++g) acc += std::abs(lam1 * a[g] - lam2 * b[g]);
        } else if (r == 2) {
            const auto& a0 = f1[0].values;
            const auto& b0 = f2[0].values;
            const auto& a1 = f1[1].values;
            const auto& b1 = f2[1].values;
            for (std::size_t g0 = 0; g0 < a0.size(); ++g0) {
                const double c1 = lam1 * a0[g0];
                const double c2 = lam2 * b0[g0];
                for (std::size_t g1 = 0; g1 < a1.size(); ++g1)
                    acc += std::abs(c1 * a1[g1] - c2 * b1[g1]);
            }
        } else {
            const auto& a0 = f1[0].values;
            const auto& b0 = f2[0].values;
            const auto& a1 = f1[1].values;
            const auto& b1 = f2[1].values;
            const auto& a2 = f1[2].values;
            const auto& b2 = f2[2].values;
            for (std::size_t g0 = 0; g0 < a0.size(); ++g0) {
                const double c1 = lam1 * a0[g0];
                const double c2 = lam2 * b0[g0];
                for (std::size_t g1 = 0; g1 < a1.size(); ++g1) {
                    const double d1 = c1 * a1[g1];
                    const double d2 = c2 * b1[g1];
                    for (std::size_t g2 = 0; g2 < a2.size(); ++g2)
                        acc += std::abs(d1 * a2[g2] - d2 * b2[g2]);
                }
            }
        }
        const double v = acc * volume;
        return {v, v, true};
    }

    // marginal of the difference is the difference of marginals
    double lower = 0.0;
    double upper = std::abs(lam1 - lam2);
    for (std::size_t k = 0; k < r; ++k) {
        double marg = 0.0;
        double step = 0.0;
        for (std::size_t g = 0; g < f1[k].values.size(); ++g) {
            marg += std::abs(lam1 * f1[k].values[g] - lam2 * f2[k].values[g]);
            step += std::abs(f1[k].values[g] - f2[k].values[g]);
        }
        lower = std::max(lower, marg * f1[k].grid.delta);
        upper += std::min(lam1, lam2) * step * f1[k].grid.delta;
    }
    return {lower, upper, false};
}

DescentReport build_report(std::size_t iter, const MixtureState& prev, const WeightMatrix& prev_w,
                           double prev_obj, const MixtureState& next, const WeightMatrix& next_w,
                           double next_obj, const BinnedDataset& data) {
    DescentReport rep;
    rep.iter = iter;
    rep.objective = next_obj;
    rep.decrease = prev_obj - next_obj;

    // KL between product-form components, factorized over coordinates
    double kl_components = 0.0;
    for (std::size_t j = 0; j < prev.components; ++j) {
        const double l1j = prev.lambda[j];
        const double l2j = next.lambda[j];
        double cross = 0.0;
        for (std::size_t k = 0; k < prev.dimension; ++k) {
            const auto& a = next.marginals[j][k].values;
            const auto& b = prev.marginals[j][k].values;
            double s = 0.0;
            for (std::size_t g = 0; g < a.size(); ++g) s += a[g] * std::log(a[g] / b[g]);
            cross += s * next.marginals[j][k].grid.delta;
        }
        kl_components += l2j * std::log(l2j / l1j) + l1j - l2j + l2j * cross;
    }
    rep.kl_components = kl_components;

    double kl_weights = 0.0;
    for (std::size_t i = 0; i < data.count; ++i)
        for (std::size_t j = 0; j < prev_w.cols; ++j) {
            const double a = prev_w.at(i, j);
            const double b = next_w.at(i, j);
            kl_weights += a * std::log(a / b);
        }
    kl_weights /= static_cast<double>(data.count);
    rep.kl_weights = kl_weights;

    rep.identity_gap = std::abs(rep.decrease - rep.kl_components - rep.kl_weights);

    double residual = 0.0;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < prev.components; ++j) {
        const L1Estimate est =
            component_l1(next.lambda[j], next.marginals[j], prev.lambda[j], prev.marginals[j]);
        residual = std::max(residual, est.upper);
        sum_sq += est.lower * est.lower;
    }
    rep.fixed_point_residual = residual;
    rep.l1_bound_slack = rep.decrease - 0.25 * sum_sq;
    return rep;
}

double objective_lower_bound(const std::vector<KernelMatrix>& kernels) {
    double bound = 0.0;
    for (const auto& k : kernels) bound -= std::log(k.max_value);
    return bound;
}

void enforce_report(const DescentReport& rep) {
    if (rep.decrease < -kDescentTol)
        throw invariant_violation("descent property violated at iteration " + std::to_string(rep.iter) +
                                  ": objective increased by " + describe(-rep.decrease));
    if (rep.identity_gap > kIdentityRelTol * std::max(1.0, std::abs(rep.objective)))
        throw invariant_violation("Remark 1 descent identity violated at iteration " +
                                  std::to_string(rep.iter) + ": gap " + describe(rep.identity_gap));
    if (rep.kl_components < -kKlNonnegTol || rep.kl_weights < -kKlNonnegTol)
        throw invariant_violation("Remark 1 decomposition term negative at iteration " +
                                  std::to_string(rep.iter));
    if (rep.l1_bound_slack < -kL1SlackTol)
        throw invariant_violation("Corollary 5 quarter-L1 bound violated at iteration " +
                                  std::to_string(rep.iter) + ": slack " + describe(rep.l1_bound_slack));
    if (rep.lower_bound_margin < -kMarginTol)
        throw invariant_violation("Lemma 5 objective lower bound violated at iteration " +
                                  std::to_string(rep.iter) + ": margin " + describe(rep.lower_bound_margin));
}

void check_minimized_state(const MixtureState& state, const std::vector<KernelMatrix>& kernels) {
    double mass = 0.0;
    for (double l : state.lambda) mass += l;
    if (std::abs(mass - 1.0) > kMassTol)
        throw invariant_violation("Theorem 1 mass normalization violated: sum(lambda) = " + describe(mass));
    for (std::size_t j = 0; j < state.components; ++j) {
        if (!(state.lambda[j] > 0.0))
            throw invariant_violation("Theorem 1: lambda[" + std::to_string(j) + "] not positive");
        for (std::size_t k = 0; k < state.dimension; ++k) {
            const auto& f = state.marginals[j][k];
            const double q = quadrature(f.grid, f.values);
            if (std::abs(q - 1.0) > kQuadratureTol)
                throw invariant_violation("minimization step: marginal (" + std::to_string(j) + "," +
                                          std::to_string(k) + ") has quadrature " + describe(q));
            const double lo = kernels[k].min_value * (1.0 - kEntryRelTol);
            const double hi = kernels[k].max_value * (1.0 + kEntryRelTol);
            for (double v : f.values)
                if (v < lo || v > hi)
                    throw invariant_violation("Lemma 11 iterate bound violated: marginal (" +
                                              std::to_string(j) + "," + std::to_string(k) + ") value " +
                                              describe(v) + " outside [" + describe(kernels[k].min_value) +
                                              ", " + describe(kernels[k].max_value) + "]");
        }
    }
}

WeightMatrix dirichlet_rows(std::size_t n, std::size_t m, std::uint64_t seed) {
    rng::Engine eng(seed);
    WeightMatrix w;
    w.rows = n;
    w.cols = m;
    w.values.assign(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double e = eng.exponential();
            w.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < m; ++j) w.at(i, j) /= sum;
    }
    return w;
}

bool has_degenerate_column(const WeightMatrix& w) {
    for (std::size_t j = 0; j < w.cols; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < w.rows; ++i) total += w.at(i, j);
        if (total < 1e-12) return true;
    }
    return false;
}

}  // namespace

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::objective_tol: return "objective-tol";
        case StopReason::fixed_point_tol: return "fixed-point-tol";
        case StopReason::max_iter: return "max-iter";
    }
    return "?";
}

StopReason stop_reason_from_string(const std::string& name) {
    if (name == "objective-tol") return StopReason::objective_tol;
    if (name == "fixed-point-tol") return StopReason::fixed_point_tol;
    if (name == "max-iter") return StopReason::max_iter;
    throw std::invalid_argument("unknown stop reason: " + name);
}

WeightMatrix majorization_step(const MixtureState& state, const BinnedDataset& data,
                               const std::vector<KernelMatrix>& kernels) {
    require_engine_inputs(data, kernels);
    return weights_from(make_nh_table(state, kernels), state, data);
}

MixtureState minimization_step(const WeightMatrix& weights, const BinnedDataset& data,
                               const std::vector<KernelMatrix>& kernels) {
    require_engine_inputs(data, kernels);
    if (weights.rows != data.count || weights.cols == 0)
        throw std::invalid_argument("minimization_step: weight matrix shape mismatch");
    const std::size_t n = data.count;
    const std::size_t m = weights.cols;
    const std::size_t r = data.dimension;

    MixtureState state;
    state.components = m;
    state.dimension = r;
    state.lambda.resize(m);
    state.marginals.assign(m, std::vector<GridFunction1D>(r));

    for (std::size_t j = 0; j < m; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += weights.at(i, j);
        if (!(total > 0.0))
            throw std::invalid_argument("minimization_step: component " + std::to_string(j) +
                                        " has zero responsibility mass");
        state.lambda[j] = total / static_cast<double>(n);

        for (std::size_t k = 0; k < r; ++k) {
            const KernelMatrix& kern = kernels[k];
            const std::size_t cells = kern.size();
            std::vector<double> num(cells, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double wi = weights.at(i, j);
                const std::size_t c = data.bins[i][k];
                const double* col = &kern.values[c];
                for (std::size_t g = 0; g < cells; ++g) num[g] += wi * col[g * cells];
            }
            for (double& v : num) v /= total;
            state.marginals[j][k] = GridFunction1D{kern.grid, std::move(num)};
        }
    }
    return state;
}

std::pair<WeightMatrix, MixtureState> initialize(const BinnedDataset& data, const FitConfig& config,
                                                 const std::vector<KernelMatrix>& kernels) {
    require_engine_inputs(data, kernels);
    if (config.components == 0) throw std::invalid_argument("initialize: need at least one component");
    if (data.count < config.components)
        throw std::invalid_argument("initialize: need at least as many observations as components");

    WeightMatrix w;
    if (config.initial_weights) {
        w = *config.initial_weights;
        if (w.rows != data.count || w.cols != config.components)
            throw std::invalid_argument("initialize: user weight matrix shape mismatch");
        validate_weight_rows(w, "initialize (user weights)");
        if (has_degenerate_column(w))
            throw std::invalid_argument("initialize: user weights give a component almost no responsibility");
    } else {
        w = dirichlet_rows(data.count, config.components, config.seed);
        if (has_degenerate_column(w)) {
            w = dirichlet_rows(data.count, config.components, config.seed + 1);
            if (has_degenerate_column(w))
                throw std::runtime_error("initialize: degenerate responsibilities after one reseed");
        }
    }
    MixtureState state = minimization_step(w, data, kernels);
    return {std::move(w), std::move(state)};
}

DescentReport descent_decomposition(const MixtureState& prev_state, const WeightMatrix& prev_weights,
                                    const MixtureState& next_state, const WeightMatrix& next_weights,
                                    const BinnedDataset& data,
                                    const std::vector<KernelMatrix>& kernels, std::size_t iter) {
    require_engine_inputs(data, kernels);
    const double prev_obj = discrete_objective(prev_state, data, kernels);
    const double next_obj = discrete_objective(next_state, data, kernels);
    DescentReport rep =
        build_report(iter, prev_state, prev_weights, prev_obj, next_state, next_weights, next_obj, data);
    rep.lower_bound_margin = next_obj - objective_lower_bound(kernels);
    return rep;
}

FitResult fit(const BinnedDataset& data, const FitConfig& config,
              const std::vector<KernelMatrix>& kernels, const IterationObserver& observer) {
    require_engine_inputs(data, kernels);
    if (!(config.tol_objective > 0.0) || !(config.tol_fixed_point > 0.0))
        throw std::invalid_argument("fit: tolerances must be positive");
    if (config.max_iter == 0) throw std::invalid_argument("fit: max_iter must be at least 1");

    const double bound = objective_lower_bound(kernels);

    auto [init_w, state] = initialize(data, config, kernels);
    (void)init_w;  // the seed rows are not a majorization output; the descent ladder starts here
    check_minimized_state(state, kernels);

    NhTable nh = make_nh_table(state, kernels);
    WeightMatrix w = weights_from(nh, state, data);
    double obj = discrete_objective_with(nh, state, data);

    FitResult result;
    result.converged = false;
    result.reason = StopReason::max_iter;
    result.iterations = 1;

    for (std::size_t step = 2; step <= config.max_iter; ++step) {
        MixtureState next = minimization_step(w, data, kernels);
        check_minimized_state(next, kernels);
        NhTable next_nh = make_nh_table(next, kernels);
        WeightMatrix next_w = weights_from(next_nh, next, data);
        const double next_obj = discrete_objective_with(next_nh, next, data);

        DescentReport rep = build_report(step, state, w, obj, next, next_w, next_obj, data);
        rep.lower_bound_margin = next_obj - bound;
        enforce_report(rep);
        result.trace.push_back(rep);

        state = std::move(next);
        w = std::move(next_w);
        nh = std::move(next_nh);
        obj = next_obj;
        result.iterations = step;
        if (observer) observer(state, rep);

        if (rep.fixed_point_residual < config.tol_fixed_point) {
            result.converged = true;
            result.reason = StopReason::fixed_point_tol;
            break;
        }
        if (std::abs(rep.decrease) < config.tol_objective) {
            result.converged = true;
            result.reason = StopReason::objective_tol;
            break;
        }
    }

    result.state = std::move(state);
    result.weights = std::move(w);
    return result;
}

}  // namespace nsmm
