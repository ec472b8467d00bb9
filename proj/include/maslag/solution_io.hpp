#pragma once

// Solution files: a CSV of (node, u1, u2, phi) in row-major lattice order and
// a JSON header with the grid spacing, residual, iteration count and solver
// parameters. Numbers are printed with 17 significant digits so a load
// reproduces them bitwise.

#include "maslag/config_io.hpp"
#include "maslag/error.hpp"
#include "maslag/ma_solver.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace maslag {

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline nlohmann::json to_json(const SolverParams& p) {
    return {{"scheme", to_string(p.scheme)},
            {"stencil_directions", p.stencil_directions},
            {"tol_residual", p.tol_residual},
            {"tol_convex", p.tol_convex},
            {"max_iterations", p.max_iterations},
            {"continuation_levels", p.continuation_levels},
            {"init_offset", p.init_offset},
            {"smoothing_sweeps", p.smoothing_sweeps}};
}

inline nlohmann::json solution_header(const PotentialField& f) {
    return {{"h", f.h()},
            {"nodes", f.grid->size()},
            {"residual_inf", f.residual_inf},
            {"tol_residual", f.tol_residual},
            {"min_direction_curvature", f.min_direction_curvature},
            {"iterations", f.iterations},
            {"sweeps", f.sweeps},
            {"levels_used", f.levels_used},
            {"config_hash", config_hash(to_config(f.problem()))},
            {"params", to_json(f.params)}};
}

/// Unknowns are numbered in row-major lattice order, so the CSV is too.
inline std::string solution_csv(const PotentialField& f) {
    std::ostringstream os;
    os << "node,u1,u2,phi\n";
    for (int n = 0; n < f.grid->size(); ++n) {
        const Point u = f.grid->position(n);
        os << n << ',' << format_double(u.x()) << ',' << format_double(u.y()) << ',' << format_double(f.values[n])
           << '\n';
    }
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes `<stem>.csv` and `<stem>.json`.
inline void export_solution(const PotentialField& f, const std::string& stem) {
    write_text(stem + ".csv", solution_csv(f));
    write_text(stem + ".json", solution_header(f).dump(2) + "\n");
}

struct SolutionFile {
    nlohmann::json header;
    std::vector<Point> positions;
    std::vector<double> values;
};

inline SolutionFile load_solution(const std::string& stem) {
    SolutionFile s;
    try {
        s.header = nlohmann::json::parse(read_text(stem + ".json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("malformed solution header " + stem + ".json: " + e.what());
    }
    std::istringstream in(read_text(stem + ".csv"));
    std::string line;
    std::getline(in, line);
    if (line != "node,u1,u2,phi") throw Error("unexpected solution CSV header in " + stem + ".csv");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int node = 0;
        double x = 0.0, y = 0.0, v = 0.0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &node, &x, &y, &v) != 4 || node != int(s.values.size()))
            throw Error("bad solution row: " + line);
        s.positions.emplace_back(x, y);
        s.values.push_back(v);
    }
    return s;
}

} // namespace maslag
