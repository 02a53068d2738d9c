#include "nsmm/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nsmm {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
    while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t')) --end;
    return s.substr(begin, end - begin);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

CsvTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw std::runtime_error(path + ": empty file");

    CsvTable table;
    for (const std::string& h : split_line(lines[0])) table.header.push_back(trim(h));
    const std::size_t ncols = table.header.size();
    if (ncols == 0) throw std::runtime_error(path + ": empty header row");

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::vector<std::string> cells = split_line(lines[li]);
        if (cells.size() != ncols)
            throw std::runtime_error(path + ": ragged row at line " + std::to_string(li + 1) +
                                     " (expected " + std::to_string(ncols) + " columns, got " +
                                     std::to_string(cells.size()) + ")");
        std::vector<double> row(ncols);
        for (std::size_t c = 0; c < ncols; ++c) {
            const std::string tok = trim(cells[c]);
            char* end = nullptr;
            errno = 0;
            const double v = tok.empty() ? NAN : std::strtod(tok.c_str(), &end);
            if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE ||
                !std::isfinite(v))
                throw std::runtime_error(path + ": non-numeric cell at line " +
                                         std::to_string(li + 1) + ", column " + std::to_string(c + 1) +
                                         ": '" + tok + "'");
            row[c] = v;
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw std::runtime_error(path + ": no observations (header only)");
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("rename failed for " + path + ": " + ec.message());
    }
}

void write_data_csv(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_double(row[c]);
        }
        out << '\n';
    }
    atomic_write(path, out.str());
}

void write_trace_csv(const std::string& path, const std::vector<DescentReport>& trace) {
    std::ostringstream out;
    out << "iter,objective,decrease,kl_components,kl_weights,identity_gap,"
           "l1_bound_slack,fixed_point_residual,lower_bound_margin\n";
    for (const auto& rep : trace) {
        out << rep.iter << ',' << format_double(rep.objective) << ',' << format_double(rep.decrease)
            << ',' << format_double(rep.kl_components) << ',' << format_double(rep.kl_weights) << ','
            << format_double(rep.identity_gap) << ',' << format_double(rep.l1_bound_slack) << ','
            << format_double(rep.fixed_point_residual) << ','
            << format_double(rep.lower_bound_margin) << '\n';
    }
    atomic_write(path, out.str());
}

}  // namespace nsmm
