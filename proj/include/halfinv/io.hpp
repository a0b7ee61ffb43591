#pragma once

// File formats: CSV tables with a header row, problem/input descriptions and
// reports as JSON. Writes go to a temporary file that is renamed into place.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "halfinv/core.hpp"
#include "halfinv/errors.hpp"
#include "halfinv/marchenko.hpp"
#include "halfinv/pipelines.hpp"
#include "halfinv/spectrum.hpp"

namespace halfinv::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidArgument("cannot write " + tmp.string());
        out << content;
        if (!out) throw InvalidArgument("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Rows of a CSV table, header checked against `columns`.
inline std::vector<std::vector<double>> read_csv(const fs::path& path, const std::vector<std::string>& columns) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string expected;
    for (std::size_t i = 0; i < columns.size(); ++i) expected += (i ? "," : "") + columns[i];
    if (line != expected) throw InvalidArgument(path.string() + ": expected header '" + expected + "'");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (row.size() != columns.size()) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(columns.size()) + " columns");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_csv(const fs::path& path, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
    std::string s;
    for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
    s += '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
        s += '\n';
    }
    write_atomic(path, s);
}

// Potential: x,value on a uniform grid over [0, 1/2].
inline void write_potential(const fs::path& path, const PotentialHalf& q) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < q.size(); ++i) rows.push_back({q.node(i), q[i]});
    write_csv(path, {"x", "value"}, rows);
}

inline PotentialHalf read_potential(const fs::path& path) {
    const auto rows = read_csv(path, {"x", "value"});
    if (rows.size() < 2) throw InvalidArgument(path.string() + ": need at least two samples");
    std::vector<double> v;
    const double step = 0.5 / static_cast<double>(rows.size() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (std::abs(rows[i][0] - step * static_cast<double>(i)) > 1e-9) {
            throw InvalidArgument(path.string() + ": x must be a uniform grid on [0, 1/2]");
        }
        v.push_back(rows[i][1]);
    }
    return PotentialHalf(std::move(v));
}

// Spectrum: n,lambda with lambda = signed square root of the eigenvalue.
inline void write_spectrum(const fs::path& path, const Spectrum& s) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < s.size(); ++n) rows.push_back({static_cast<double>(n), s.lambda(n)});
    write_csv(path, {"n", "lambda"}, rows);
}

inline Spectrum read_spectrum(const fs::path& path) {
    const auto rows = read_csv(path, {"n", "lambda"});
    std::vector<double> l;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][0] != static_cast<double>(i)) throw InvalidArgument(path.string() + ": n must count from 0");
        l.push_back(rows[i][1]);
    }
    return Spectrum::from_lambdas(l);
}

inline Json potential_json(const PotentialHalf& q) {
    return Json(std::vector<double>(q.values().begin(), q.values().end()));
}

inline PotentialHalf potential_from_json(const Json& j, const fs::path& base) {
    if (j.is_string()) return read_potential(base / j.get<std::string>());
    if (j.is_array()) return PotentialHalf(j.get<std::vector<double>>());
    if (j.is_number()) return PotentialHalf::constant(j.get<double>());
    throw InvalidArgument("potential must be an array of samples, a constant or a CSV path");
}

// Problem: {"q1", "q2", "h1", "h2", "a1", "a2", "d"}; potentials inline or as CSV paths.
inline Json problem_json(const ProblemSpec& p) {
    return {{"q1", potential_json(p.q1)}, {"q2", potential_json(p.q2)}, {"h1", p.boundary.h1},
            {"h2", p.boundary.h2},        {"a1", p.jump.a1},            {"a2", p.jump.a2},
            {"d", p.jump.d}};
}

inline ProblemSpec problem_from_json(const Json& j, const fs::path& base = {}) {
    try {
        ProblemSpec p{potential_from_json(j.at("q1"), base), potential_from_json(j.at("q2"), base),
                      {j.at("h1").get<double>(), j.at("h2").get<double>()},
                      {j.at("a1").get<double>(), j.value("a2", 0.0), j.value("d", 0.5)}};
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("problem description: ") + e.what());
    }
}

inline ProblemSpec read_problem(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
    return problem_from_json(j, path.parent_path());
}

inline void write_json(const fs::path& path, const Json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline Json read_json(const fs::path& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

// Interpolation nodes: n,node,value.
inline void write_nodes(const fs::path& path, const std::vector<double>& nodes, const std::vector<double>& values) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < nodes.size(); ++n) rows.push_back({static_cast<double>(n), nodes[n], values.at(n)});
    write_csv(path, {"n", "node", "value"}, rows);
}

// Trace of phi1(1/2, lambda), phi1'(1/2, lambda): lambda,phi,dphi.
template <class Fns>
void write_trace(const fs::path& path, const Fns& fns, double lo, double hi, double step) {
    std::vector<std::vector<double>> rows;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        const double l = lo + step * static_cast<double>(i);
        const auto [v, d] = fns.eval(l * l);
        rows.push_back({l, v, d});
    }
    write_csv(path, {"lambda", "phi", "dphi"}, rows);
}

// Transformation kernel on its triangular grid: x,t,K.
inline void write_kernel(const fs::path& path, const TransformKernel& k) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < k.rows.size(); ++i)
        for (std::size_t j = 0; j < k.rows[i].size(); ++j)
            rows.push_back({k.x(i), k.x(i) + k.step * static_cast<double>(j), k.rows[i][j]});
    write_csv(path, {"x", "t", "K"}, rows);
}

// S on a real lambda grid: lambda,Re S,Im S.
inline void write_scattering(const fs::path& path, const SFn& s, double lo, double hi, double step) {
    std::vector<std::vector<double>> rows;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        const double l = lo + step * static_cast<double>(i);
        const auto v = s(l);
        rows.push_back({l, v.real(), v.imag()});
    }
    write_csv(path, {"lambda", "Re S", "Im S"}, rows);
}

// Spectral data of the left problem: n,mu_sq,alpha.
inline void write_spectral_data(const fs::path& path, const SpectralData& sd) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < sd.mus_sq.size(); ++n) rows.push_back({static_cast<double>(n), sd.mus_sq[n], sd.alphas[n]});
    write_csv(path, {"n", "mu_sq", "alpha"}, rows);
}

inline SpectralData read_spectral_data(const fs::path& path) {
    SpectralData sd;
    for (const auto& r : read_csv(path, {"n", "mu_sq", "alpha"})) {
        sd.mus_sq.push_back(r[1]);
        sd.alphas.push_back(r[2]);
    }
    return sd;
}

}  // namespace halfinv::io
