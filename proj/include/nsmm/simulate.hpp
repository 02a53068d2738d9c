#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nsmm {

/// Bounded univariate density recipe on a domain (a, b): a normal truncated
/// to the domain, or a beta rescaled onto it.
struct MarginalRecipe {
    enum class Kind { truncated_normal, beta };
    Kind kind = Kind::truncated_normal;
    double p1 = 0.5;   // mean        | alpha
    double p2 = 0.1;   // sd          | beta
};

struct SyntheticSpec {
    std::size_t components = 0;  // m
    std::size_t dimension = 0;   // r
    std::size_t count = 0;       // n
    std::uint64_t seed = 0;
    std::vector<double> mixing;                        // m entries, positive, sum 1
    std::vector<std::pair<double, double>> domains;    // r entries (a, b)
    std::vector<std::vector<MarginalRecipe>> recipes;  // [m][r]
};

/// Validates the invariants above; throws std::invalid_argument on any breach.
void validate(const SyntheticSpec& spec);

SyntheticSpec load_synthetic_spec(const std::string& path);

struct SimulatedData {
    std::vector<std::vector<double>> values;  // [n][r]
    std::vector<std::size_t> labels;          // [n], which component drew the row
};

/// Seeded draw: pick a component by the mixing weights, then each coordinate
/// independently from its recipe. Reproducible for a fixed seed.
SimulatedData simulate(const SyntheticSpec& spec);

/// Truth marginal density of one recipe at x (the density the draw follows).
double recipe_density(const MarginalRecipe& recipe, double a, double b, double x);

}  // namespace nsmm
