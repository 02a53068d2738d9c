#include "nsmm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "nsmm/csv.hpp"
#include "nsmm/diagnose.hpp"
#include "nsmm/engine.hpp"
#include "nsmm/model_io.hpp"
#include "nsmm/simulate.hpp"

namespace nsmm {

namespace {

struct FitArgs {
    std::string data_path;
    std::size_t components = 0;
    double bandwidth = 0.0;  // 0 means "use the rule"
    std::string bandwidth_rule = "silverman";
    std::size_t grid_size = 128;
    std::vector<std::string> domains;
    std::string kernel = "gaussian";
    std::uint64_t seed = 0;
    std::size_t max_iter = 500;
    double tol = 1e-9;
    std::string out_path;
    std::string trace_path;
};

struct SimulateArgs {
    std::string spec_path;
    std::string out_path;
    std::string labels_path;
};

struct DiagnoseArgs {
    std::string model_path;
    std::string data_path;
};

std::vector<double> column_of(const std::vector<std::vector<double>>& rows, std::size_t k) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& row : rows) col.push_back(row[k]);
    return col;
}

std::pair<double, double> parse_domain(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("--domain expects 'a,b', got '" + text + "'");
    char* end = nullptr;
    const std::string lo = text.substr(0, comma);
    const std::string hi = text.substr(comma + 1);
    const double a = std::strtod(lo.c_str(), &end);
    if (end != lo.c_str() + lo.size()) throw std::invalid_argument("--domain: bad number '" + lo + "'");
    const double b = std::strtod(hi.c_str(), &end);
    if (end != hi.c_str() + hi.size()) throw std::invalid_argument("--domain: bad number '" + hi + "'");
    if (!(a < b)) throw std::invalid_argument("--domain: require a < b");
    return {a, b};
}

/// Sort components by mass descending, ties by first-coordinate mean ascending.
/// Labels carry no meaning, so the output order is pinned for reproducibility.
MixtureState sorted_components(const MixtureState& state) {
    std::vector<std::size_t> order(state.components);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> first_mean(state.components, 0.0);
    for (std::size_t j = 0; j < state.components; ++j) {
        const auto& f = state.marginals[j][0];
        double s = 0.0;
        for (std::size_t g = 0; g < f.values.size(); ++g) s += f.grid.midpoints[g] * f.values[g];
        first_mean[j] = s * f.grid.delta;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (state.lambda[x] != state.lambda[y]) return state.lambda[x] > state.lambda[y];
        return first_mean[x] < first_mean[y];
    });
    MixtureState sorted;
    sorted.components = state.components;
    sorted.dimension = state.dimension;
    for (std::size_t j : order) {
        sorted.lambda.push_back(state.lambda[j]);
        sorted.marginals.push_back(state.marginals[j]);
    }
    return sorted;
}

int do_fit(const FitArgs& args) {
    const CsvTable table = load_csv(args.data_path);
    const std::size_t n = table.rows.size();
    const std::size_t r = table.header.size();
    if (n < args.components)
        throw std::invalid_argument("fit: fewer observations (" + std::to_string(n) +
                                    ") than components (" + std::to_string(args.components) + ")");
    if (args.bandwidth_rule != "silverman")
        throw std::invalid_argument("fit: unknown bandwidth rule '" + args.bandwidth_rule + "'");

    std::vector<double> bandwidths(r);
    for (std::size_t k = 0; k < r; ++k) {
        bandwidths[k] = args.bandwidth > 0.0 ? args.bandwidth
                                             : silverman_bandwidth(column_of(table.rows, k));
        if (!(bandwidths[k] > 0.0))
            throw std::invalid_argument("fit: degenerate bandwidth for coordinate " + std::to_string(k));
    }

    std::vector<std::pair<double, double>> domains(r);
    const bool auto_domain =
        args.domains.empty() || (args.domains.size() == 1 && args.domains[0] == "auto");
    if (!auto_domain) {
        if (args.domains.size() != r)
            throw std::invalid_argument("fit: got " + std::to_string(args.domains.size()) +
                                        " --domain flags for " + std::to_string(r) + " coordinates");
        for (std::size_t k = 0; k < r; ++k) domains[k] = parse_domain(args.domains[k]);
    } else {
        for (std::size_t k = 0; k < r; ++k) {
            const std::vector<double> col = column_of(table.rows, k);
            const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
            domains[k] = {*lo - 3.0 * bandwidths[k], *hi + 3.0 * bandwidths[k]};
        }
    }

    const KernelFamily family = kernel_family_from_string(args.kernel);
    std::vector<Grid1D> grids;
    std::vector<KernelMatrix> kernels;
    for (std::size_t k = 0; k < r; ++k) {
        grids.push_back(build_grid(domains[k].first, domains[k].second, args.grid_size));
        kernels.push_back(build_kernel(grids.back(), bandwidths[k], family));
    }

    const BinnedDataset data = bin_dataset(table.rows, grids);
    FitConfig config;
    config.components = args.components;
    config.max_iter = args.max_iter;
    config.tol_objective = args.tol;
    config.seed = args.seed;

    FitResult result = fit(data, config, kernels);
    result.state = sorted_components(result.state);

    const ModelDocument doc = make_document(kernels, result, args.seed);
    save_model(doc, args.out_path);
    if (!args.trace_path.empty()) write_trace_csv(args.trace_path, result.trace);

    std::cout << (result.converged ? "converged" : "stopped") << " after " << result.iterations
              << " iterations (" << to_string(result.reason) << ")";
    if (!result.trace.empty()) std::cout << ", objective " << format_double(result.trace.back().objective);
    std::cout << "\nmodel written to " << args.out_path << "\n";
    return result.converged ? 0 : 2;
}

int do_simulate(const SimulateArgs& args) {
    const SyntheticSpec spec = load_synthetic_spec(args.spec_path);
    const SimulatedData sim = simulate(spec);

    std::vector<std::string> header;
    for (std::size_t k = 0; k < spec.dimension; ++k) header.push_back("x" + std::to_string(k + 1));
    write_data_csv(args.out_path, header, sim.values);

    const std::string labels_path =
        args.labels_path.empty() ? args.out_path + ".labels.csv" : args.labels_path;
    std::ostringstream labels;
    labels << "label\n";
    for (std::size_t l : sim.labels) labels << l << '\n';
    atomic_write(labels_path, labels.str());

    std::cout << "wrote " << sim.values.size() << " observations to " << args.out_path
              << " (labels in " << labels_path << ")\n";
    return 0;
}

int do_diagnose(const DiagnoseArgs& args) {
    const ModelDocument doc = load_model(args.model_path);
    const CsvTable table = load_csv(args.data_path);
    const std::vector<PropertyResult> results = run_diagnostics(doc, table.rows);
    bool all_pass = true;
    for (const auto& res : results) {
        std::cout << (res.pass ? "PASS  " : "FAIL  ") << res.name << ": " << res.detail << "\n";
        all_pass = all_pass && res.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& column) {
    const std::size_t n = column.size();
    if (n < 2) throw std::invalid_argument("silverman_bandwidth: need at least 2 observations");

    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= n) return sorted.back();
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);

    const double spread = std::min(sd, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    if (!(h > 0.0))
        throw std::invalid_argument("silverman_bandwidth: zero spread (constant coordinate?)");
    return h;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Nonparametric estimation of conditional-independence finite mixtures\n"
                 "by penalized smoothed Kullback-Leibler descent on a fixed grid."};
    app.name("nsmm");
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a mixture model to CSV data");
    fit_cmd->add_option("--data", fit_args.data_path, "CSV file, one header row, numeric columns")
        ->required();
    fit_cmd->add_option("--components", fit_args.components, "Number of mixture components")
        ->required()
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--bandwidth", fit_args.bandwidth, "Kernel bandwidth for all coordinates")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--bandwidth-rule", fit_args.bandwidth_rule,
                        "Plug-in rule when --bandwidth is absent (silverman)");
    fit_cmd->add_option("--grid-size", fit_args.grid_size, "Cells per coordinate (default 128)")
        ->check(CLI::Range(static_cast<std::size_t>(2), static_cast<std::size_t>(1 << 16)));
    fit_cmd->add_option("--domain", fit_args.domains,
                        "Domain 'a,b' per coordinate (repeat per coordinate), or 'auto'");
    fit_cmd->add_option("--kernel", fit_args.kernel,
                        "Kernel family: gaussian | epanechnikov-floored | uniform");
    fit_cmd->add_option("--seed", fit_args.seed, "Initialization seed (default 0)");
    fit_cmd->add_option("--max-iter", fit_args.max_iter, "Iteration cap (default 500)")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--tol", fit_args.tol, "Objective decrease tolerance (default 1e-9)")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--out", fit_args.out_path, "Output model JSON")->required();
    fit_cmd->add_option("--trace", fit_args.trace_path, "Optional per-iteration trace CSV");

    SimulateArgs sim_args;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Draw a synthetic dataset from a spec");
    sim_cmd->add_option("--spec", sim_args.spec_path, "Synthetic spec JSON")->required();
    sim_cmd->add_option("--out", sim_args.out_path, "Output data CSV")->required();
    sim_cmd->add_option("--labels", sim_args.labels_path,
                        "Truth label CSV (default: <out>.labels.csv)");

    DiagnoseArgs diag_args;
    CLI::App* diag_cmd =
        app.add_subcommand("diagnose", "Check the theory-backed properties of a fitted model");
    diag_cmd->add_option("--model", diag_args.model_path, "Model JSON from fit")->required();
    diag_cmd->add_option("--data", diag_args.data_path, "The CSV the model was fit on")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fit_cmd->parsed()) return do_fit(fit_args);
        if (sim_cmd->parsed()) return do_simulate(sim_args);
        if (diag_cmd->parsed()) return do_diagnose(diag_args);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const invariant_violation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace nsmm
