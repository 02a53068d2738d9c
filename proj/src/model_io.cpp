#include "nsmm/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nsmm/csv.hpp"

namespace nsmm {

namespace {

using nlohmann::json;

void write_report(std::ostringstream& out, const DescentReport& rep, const char* indent) {
    out << indent << "\"iter\": " << rep.iter << ",\n"
        << indent << "\"objective\": " << format_double(rep.objective) << ",\n"
        << indent << "\"decrease\": " << format_double(rep.decrease) << ",\n"
        << indent << "\"kl_components\": " << format_double(rep.kl_components) << ",\n"
        << indent << "\"kl_weights\": " << format_double(rep.kl_weights) << ",\n"
        << indent << "\"identity_gap\": " << format_double(rep.identity_gap) << ",\n"
        << indent << "\"l1_bound_slack\": " << format_double(rep.l1_bound_slack) << ",\n"
        << indent << "\"fixed_point_residual\": " << format_double(rep.fixed_point_residual) << ",\n"
        << indent << "\"lower_bound_margin\": " << format_double(rep.lower_bound_margin) << "\n";
}

DescentReport parse_report(const json& j) {
    DescentReport rep;
    rep.iter = j.at("iter").get<std::size_t>();
    rep.objective = j.at("objective").get<double>();
    rep.decrease = j.at("decrease").get<double>();
    rep.kl_components = j.at("kl_components").get<double>();
    rep.kl_weights = j.at("kl_weights").get<double>();
    rep.identity_gap = j.at("identity_gap").get<double>();
    rep.l1_bound_slack = j.at("l1_bound_slack").get<double>();
    rep.fixed_point_residual = j.at("fixed_point_residual").get<double>();
    rep.lower_bound_margin = j.at("lower_bound_margin").get<double>();
    return rep;
}

}  // namespace

ModelDocument make_document(const std::vector<KernelMatrix>& kernels, const FitResult& result,
                            std::uint64_t seed) {
    ModelDocument doc;
    if (kernels.empty()) throw std::invalid_argument("make_document: no kernels");
    doc.family = kernels.front().family;
    for (const auto& k : kernels)
        doc.coordinates.push_back(CoordinateSpec{k.grid.a, k.grid.b, k.grid.cells, k.bandwidth});
    doc.lambda = result.state.lambda;
    doc.marginals.resize(result.state.components);
    for (std::size_t j = 0; j < result.state.components; ++j)
        for (const auto& f : result.state.marginals[j]) doc.marginals[j].push_back(f.values);
    doc.seed = seed;
    doc.iterations = result.iterations;
    doc.converged = result.converged;
    doc.reason = result.reason;
    if (!result.trace.empty()) doc.final_report = result.trace.back();
    return doc;
}

void save_model(const ModelDocument& doc, const std::string& path) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"schema_version\": " << doc.schema_version << ",\n";
    out << "  \"kernel_family\": \"" << to_string(doc.family) << "\",\n";
    out << "  \"coordinates\": [\n";
    for (std::size_t k = 0; k < doc.coordinates.size(); ++k) {
        const auto& c = doc.coordinates[k];
        out << "    {\"a\": " << format_double(c.a) << ", \"b\": " << format_double(c.b)
            << ", \"grid_size\": " << c.grid_size << ", \"bandwidth\": " << format_double(c.bandwidth)
            << "}" << (k + 1 < doc.coordinates.size() ? "," : "") << "\n";
    }
    out << "  ],\n";
    out << "  \"lambda\": [";
    for (std::size_t j = 0; j < doc.lambda.size(); ++j)
        out << (j ? ", " : "") << format_double(doc.lambda[j]);
    out << "],\n";
    out << "  \"marginals\": [\n";
    for (std::size_t j = 0; j < doc.marginals.size(); ++j) {
        out << "    [\n";
        for (std::size_t k = 0; k < doc.marginals[j].size(); ++k) {
            out << "      [";
            const auto& vals = doc.marginals[j][k];
            for (std::size_t g = 0; g < vals.size(); ++g) out << (g ? ", " : "") << format_double(vals[g]);
            out << "]" << (k + 1 < doc.marginals[j].size() ? "," : "") << "\n";
        }
        out << "    ]" << (j + 1 < doc.marginals.size() ? "," : "") << "\n";
    }
    out << "  ],\n";
    out << "  \"fit\": {\"seed\": " << doc.seed << ", \"iterations\": " << doc.iterations
        << ", \"converged\": " << (doc.converged ? "true" : "false") << ", \"reason\": \""
        << to_string(doc.reason) << "\", \"summation_path\": \"" << doc.summation_path << "\"},\n";
    out << "  \"final_report\": {\n";
    write_report(out, doc.final_report, "    ");
    out << "  }\n";
    out << "}\n";
    atomic_write(path, out.str());
}

ModelDocument load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    try {
        ModelDocument doc;
        doc.schema_version = j.at("schema_version").get<int>();
        if (doc.schema_version != 1)
            throw std::runtime_error("unsupported schema_version " + std::to_string(doc.schema_version));
        doc.family = kernel_family_from_string(j.at("kernel_family").get<std::string>());
        for (const auto& c : j.at("coordinates")) {
            CoordinateSpec spec;
            spec.a = c.at("a").get<double>();
            spec.b = c.at("b").get<double>();
            spec.grid_size = c.at("grid_size").get<std::size_t>();
            spec.bandwidth = c.at("bandwidth").get<double>();
            doc.coordinates.push_back(spec);
        }
        doc.lambda = j.at("lambda").get<std::vector<double>>();
        doc.marginals = j.at("marginals").get<std::vector<std::vector<std::vector<double>>>>();
        const auto& fit = j.at("fit");
        doc.seed = fit.at("seed").get<std::uint64_t>();
        doc.iterations = fit.at("iterations").get<std::size_t>();
        doc.converged = fit.at("converged").get<bool>();
        doc.reason = stop_reason_from_string(fit.at("reason").get<std::string>());
        doc.summation_path = fit.at("summation_path").get<std::string>();
        doc.final_report = parse_report(j.at("final_report"));

        if (doc.lambda.size() != doc.marginals.size())
            throw std::runtime_error("lambda and marginals disagree on the component count");
        for (const auto& comp : doc.marginals) {
            if (comp.size() != doc.coordinates.size())
                throw std::runtime_error("marginal count differs from coordinate count");
            for (std::size_t k = 0; k < comp.size(); ++k)
                if (comp[k].size() != doc.coordinates[k].grid_size)
                    throw std::runtime_error("marginal length differs from grid size");
        }
        return doc;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed model document: " + e.what());
    }
}

std::vector<Grid1D> grids_from_document(const ModelDocument& doc) {
    std::vector<Grid1D> grids;
    for (const auto& c : doc.coordinates) grids.push_back(build_grid(c.a, c.b, c.grid_size));
    return grids;
}

std::vector<KernelMatrix> kernels_from_document(const ModelDocument& doc) {
    std::vector<KernelMatrix> kernels;
    for (const auto& c : doc.coordinates)
        kernels.push_back(build_kernel(build_grid(c.a, c.b, c.grid_size), c.bandwidth, doc.family));
    return kernels;
}

MixtureState state_from_document(const ModelDocument& doc) {
    MixtureState state;
    state.components = doc.lambda.size();
    state.dimension = doc.coordinates.size();
    state.lambda = doc.lambda;
    const std::vector<Grid1D> grids = grids_from_document(doc);
    state.marginals.resize(state.components);
    for (std::size_t j = 0; j < state.components; ++j)
        for (std::size_t k = 0; k < state.dimension; ++k)
            state.marginals[j].push_back(GridFunction1D{grids[k], doc.marginals[j][k]});
    return state;
}

}  // namespace nsmm
