#include "nsmm/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsmm/oracle.hpp"
#include "nsmm/rng.hpp"

namespace nsmm {

namespace {

std::string brief(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

}  // namespace

std::vector<PropertyResult> run_diagnostics(const ModelDocument& doc,
                                            const std::vector<std::vector<double>>& raw) {
    std::vector<PropertyResult> out;
    const std::vector<Grid1D> grids = grids_from_document(doc);
    const std::vector<KernelMatrix> kernels = kernels_from_document(doc);
    const MixtureState state = state_from_document(doc);
    const BinnedDataset data = bin_dataset(raw, grids);
    const std::size_t r = state.dimension;

    // Theorem 1: component masses of a solution sum to one
    {
        double mass = 0.0;
        for (double l : state.lambda) mass += l;
        const double gap = std::abs(mass - 1.0);
        out.push_back({"Theorem 1 (mixing mass)", gap <= 1e-12, gap,
                       "|sum(lambda) - 1| = " + brief(gap) + " (tol 1e-12)"});
    }

    // Lemma 11: marginal values stay inside the kernel entry range
    {
        double worst = 0.0;
        for (std::size_t j = 0; j < state.components; ++j)
            for (std::size_t k = 0; k < r; ++k)
                for (double v : state.marginals[j][k].values) {
                    worst = std::max(worst, (kernels[k].min_value - v) / kernels[k].min_value);
                    worst = std::max(worst, (v - kernels[k].max_value) / kernels[k].max_value);
                }
        out.push_back({"Lemma 11 (iterate positivity bounds)", worst <= 1e-10, worst,
                       "worst relative excursion outside [min, max] kernel entries = " + brief(worst) +
                           " (tol 1e-10)"});
    }

    // Lemma 5: objective bounded below by -sum_k log(max kernel entry)
    double objective = 0.0;
    {
        objective = discrete_objective(state, data, kernels);
        double bound = 0.0;
        for (const auto& k : kernels) bound -= std::log(k.max_value);
        const double margin = objective - bound;
        out.push_back({"Lemma 5 (objective lower bound)", margin >= -1e-10, margin,
                       "objective " + brief(objective) + " - bound " + brief(bound) + " = " +
                           brief(margin) + " (must be >= -1e-10)"});
    }

    // Lemma 7: sup and Lipschitz bounds of the assembled components.
    // max and adjacent difference of a product factorize over coordinates,
    // so this is the exhaustive scan evaluated without the tensor.
    {
        double sup_limit = 1.0;
        for (const auto& k : kernels) sup_limit *= k.max_value;
        double worst = -1.0;
        for (std::size_t j = 0; j < state.components; ++j) {
            std::vector<double> fmax(r);
            for (std::size_t k = 0; k < r; ++k)
                fmax[k] = *std::max_element(state.marginals[j][k].values.begin(),
                                            state.marginals[j][k].values.end());
            double sup = state.lambda[j];
            for (std::size_t k = 0; k < r; ++k) sup *= fmax[k];
            worst = std::max(worst, (sup - sup_limit) / sup_limit);

            for (std::size_t axis = 0; axis < r; ++axis) {
                double limit = kernels[axis].slope_bound;
                double envelope = state.lambda[j];
                for (std::size_t k = 0; k < r; ++k)
                    if (k != axis) {
                        limit *= kernels[k].max_value;
                        envelope *= fmax[k];
                    }
                const auto& f = state.marginals[j][axis].values;
                double step = 0.0;
                for (std::size_t g = 0; g + 1 < f.size(); ++g)
                    step = std::max(step, std::abs(f[g + 1] - f[g]));
                const double slope = envelope * step / grids[axis].delta;
                if (limit > 0.0) worst = std::max(worst, (slope - limit) / limit);
                else worst = std::max(worst, slope);  // uniform kernel: slope must be 0
            }
        }
        out.push_back({"Lemma 7 (sup and Lipschitz bounds)", worst <= 1e-10, worst,
                       "worst relative excess over the bounds = " + brief(worst) + " (tol 1e-10)"});
    }

    // Lemma 1: commutativity of projection and smoothing at reference scale
    {
        const std::size_t check_rank = std::min<std::size_t>(r, 3);
        std::vector<Grid1D> small;
        std::vector<KernelMatrix> small_kernels;
        for (std::size_t k = 0; k < check_rank; ++k) {
            small.push_back(build_grid(grids[k].a, grids[k].b, 8));
            // the commutativity statement holds for any valid kernel; on the
            // coarse grid the model bandwidth can be far below the cell width,
            // which makes the rescaling degenerate, so clamp it up
            const double h = std::max(kernels[k].bandwidth, 2.0 * small.back().delta);
            small_kernels.push_back(build_kernel(small.back(), h, doc.family));
        }
        rng::Engine eng(doc.seed + 17);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            TensorField f(small);
            for (double& v : f.values()) v = eng.uniform01() + 1e-3;
            worst = std::max(worst, oracle::check_commutativity(f, small_kernels));
        }
        out.push_back({"Lemma 1 (projection/smoothing commutativity)", worst <= 1e-10, worst,
                       "max gap over 20 random fields at reference scale = " + brief(worst) +
                           " (tol 1e-10)"});
    }

    // Remark 1 and Corollary 5: a few fresh iterations from the stored state
    {
        double worst_identity = 0.0;
        double worst_slack = 0.0;
        double worst_increase = 0.0;
        MixtureState prev = state;
        WeightMatrix prev_w = majorization_step(prev, data, kernels);
        for (int t = 0; t < 5; ++t) {
            MixtureState next = minimization_step(prev_w, data, kernels);
            WeightMatrix next_w = majorization_step(next, data, kernels);
            const DescentReport rep = descent_decomposition(prev, prev_w, next, next_w, data, kernels,
                                                            static_cast<std::size_t>(t + 1));
            worst_identity =
                std::max(worst_identity, rep.identity_gap / std::max(1.0, std::abs(rep.objective)));
            worst_slack = std::min(worst_slack, rep.l1_bound_slack);
            worst_increase = std::min(worst_increase, rep.decrease);
            prev = std::move(next);
            prev_w = std::move(next_w);
        }
        out.push_back({"Remark 1 (descent identity)",
                       worst_identity <= 1e-8 && worst_increase >= -1e-10, worst_identity,
                       "max relative identity gap over 5 iterations = " + brief(worst_identity) +
                           ", worst decrease = " + brief(worst_increase)});
        out.push_back({"Corollary 5 (quarter-L1 descent bound)", worst_slack >= -1e-8, worst_slack,
                       "min slack of decrease - sum ||step||_1^2 / 4 = " + brief(worst_slack) +
                           " (must be >= -1e-8)"});
    }

    return out;
}

}  // namespace nsmm
