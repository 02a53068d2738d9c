#include "nsmm/simulate.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "nsmm/rng.hpp"

namespace nsmm {

namespace {

using nlohmann::json;

double normal_cdf(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

MarginalRecipe parse_recipe(const json& j) {
    MarginalRecipe rec;
    const std::string family = j.at("family").get<std::string>();
    if (family == "truncated-normal") {
        rec.kind = MarginalRecipe::Kind::truncated_normal;
        rec.p1 = j.at("mean").get<double>();
        rec.p2 = j.at("sd").get<double>();
    } else if (family == "beta") {
        rec.kind = MarginalRecipe::Kind::beta;
        rec.p1 = j.at("alpha").get<double>();
        rec.p2 = j.at("beta").get<double>();
    } else {
        throw std::invalid_argument("unknown marginal family: " + family);
    }
    return rec;
}

double draw_from(const MarginalRecipe& rec, double a, double b, rng::Engine& eng) {
    if (rec.kind == MarginalRecipe::Kind::truncated_normal) {
        for (int tries = 0; tries < 100000; ++tries) {
            const double x = rec.p1 + rec.p2 * eng.normal();
            if (x > a && x < b) return x;
        }
        throw std::runtime_error("simulate: truncated-normal rejection failed (domain far in the tail)");
    }
    for (int tries = 0; tries < 100000; ++tries) {
        const double y = eng.beta(rec.p1, rec.p2);
        if (y > 0.0 && y < 1.0) return a + (b - a) * y;
    }
    throw std::runtime_error("simulate: beta draw degenerate");
}

}  // namespace

void validate(const SyntheticSpec& spec) {
    if (spec.components == 0 || spec.dimension == 0 || spec.count == 0)
        throw std::invalid_argument("synthetic spec: m, r, n must all be at least 1");
    if (spec.mixing.size() != spec.components)
        throw std::invalid_argument("synthetic spec: mixing length differs from component count");
    double total = 0.0;
    for (double w : spec.mixing) {
        if (!(w > 0.0)) throw std::invalid_argument("synthetic spec: all mixing weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("synthetic spec: mixing weights must sum to 1");
    if (spec.domains.size() != spec.dimension)
        throw std::invalid_argument("synthetic spec: one domain per coordinate required");
    for (const auto& [a, b] : spec.domains)
        if (!(a < b)) throw std::invalid_argument("synthetic spec: each domain needs a < b");
    if (spec.recipes.size() != spec.components)
        throw std::invalid_argument("synthetic spec: one recipe row per component required");
    for (const auto& row : spec.recipes) {
        if (row.size() != spec.dimension)
            throw std::invalid_argument("synthetic spec: one recipe per coordinate required");
        for (const auto& rec : row) {
            if (rec.kind == MarginalRecipe::Kind::truncated_normal) {
                if (!(rec.p2 > 0.0)) throw std::invalid_argument("synthetic spec: sd must be positive");
            } else {
                if (!(rec.p1 > 0.0) || !(rec.p2 > 0.0))
                    throw std::invalid_argument("synthetic spec: beta parameters must be positive");
            }
        }
    }
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    try {
        SyntheticSpec spec;
        spec.components = j.at("m").get<std::size_t>();
        spec.dimension = j.at("r").get<std::size_t>();
        spec.count = j.at("n").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.mixing = j.at("mixing").get<std::vector<double>>();
        for (const auto& d : j.at("domains"))
            spec.domains.emplace_back(d.at(0).get<double>(), d.at(1).get<double>());
        for (const auto& row : j.at("components")) {
            std::vector<MarginalRecipe> recipes;
            for (const auto& rec : row) recipes.push_back(parse_recipe(rec));
            spec.recipes.push_back(std::move(recipes));
        }
        validate(spec);
        return spec;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed synthetic spec: " + e.what());
    }
}

SimulatedData simulate(const SyntheticSpec& spec) {
    validate(spec);
    rng::Engine eng(spec.seed);
    std::vector<double> cumulative(spec.components);
    double acc = 0.0;
    for (std::size_t j = 0; j < spec.components; ++j) {
        acc += spec.mixing[j];
        cumulative[j] = acc;
    }

    SimulatedData out;
    out.values.assign(spec.count, std::vector<double>(spec.dimension, 0.0));
    out.labels.assign(spec.count, 0);
    for (std::size_t i = 0; i < spec.count; ++i) {
        const double u = eng.uniform01();
        std::size_t j = spec.components - 1;
        for (std::size_t c = 0; c < spec.components; ++c)
            if (u < cumulative[c]) {
                j = c;
                break;
            }
        out.labels[i] = j;
        for (std::size_t k = 0; k < spec.dimension; ++k)
            out.values[i][k] =
                draw_from(spec.recipes[j][k], spec.domains[k].first, spec.domains[k].second, eng);
    }
    return out;
}

double recipe_density(const MarginalRecipe& recipe, double a, double b, double x) {
    if (x <= a || x >= b) return 0.0;
    if (recipe.kind == MarginalRecipe::Kind::truncated_normal) {
        const double mu = recipe.p1;
        const double sd = recipe.p2;
        const double z = (x - mu) / sd;
        const double phi = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
        const double norm = normal_cdf((b - mu) / sd) - normal_cdf((a - mu) / sd);
        return phi / norm;
    }
    const double p = recipe.p1;
    const double q = recipe.p2;
    const double y = (x - a) / (b - a);
    const double log_beta = std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
    return std::exp((p - 1.0) * std::log(y) + (q - 1.0) * std::log(1.0 - y) - log_beta) / (b - a);
}

}  // namespace nsmm
