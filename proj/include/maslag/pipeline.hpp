#pragma once

// End-to-end run: config -> solve -> y-plane analysis -> reduced graph ->
// ends, with every check recorded in report.json and every artifact in a
// checksummed manifest. report.json carries no timings, so repeated runs of
// the same config and flags produce identical bytes.

#include "maslag/bounds.hpp"
#include "maslag/config_io.hpp"
#include "maslag/convex_analysis.hpp"
#include "maslag/error.hpp"
#include "maslag/lagrangian_builder.hpp"
#include "maslag/ma_solver.hpp"
#include "maslag/solution_io.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace maslag {

inline constexpr const char* kVersion = "1.0.0";

enum class Stage { grid, solve, gradient, subgradients, amoeba, mass_balance, mesh, ends, appendix };

inline constexpr std::array<const char*, 9> kStageNames = {"grid",         "solve",        "gradient",
                                                           "subgradients", "amoeba",       "mass_balance",
                                                           "mesh",         "ends",         "appendix"};

inline const char* to_string(Stage s) { return kStageNames[std::size_t(s)]; }

inline Stage parse_stage(const std::string& name) {
    for (std::size_t k = 0; k < kStageNames.size(); ++k)
        if (name == kStageNames[k]) return Stage(k);
    throw ConfigError("unknown stage '" + name + "'");
}

/// Requested stages plus everything they depend on. Empty means all.
inline std::array<bool, 9> resolve_stages(const std::vector<std::string>& names) {
    std::array<bool, 9> on{};
    if (names.empty()) {
        on.fill(true);
        return on;
    }
    for (const auto& n : names) on[std::size_t(parse_stage(n))] = true;
    auto need = [&](Stage s, Stage dep) {
        if (on[std::size_t(s)]) on[std::size_t(dep)] = true;
    };
    // Later stages first so chains propagate in one pass.
    need(Stage::appendix, Stage::ends);
    need(Stage::ends, Stage::gradient);
    need(Stage::mesh, Stage::gradient);
    need(Stage::mass_balance, Stage::subgradients);
    need(Stage::amoeba, Stage::subgradients);
    need(Stage::subgradients, Stage::solve);
    need(Stage::gradient, Stage::solve);
    need(Stage::solve, Stage::grid);
    return on;
}

struct RunOptions {
    std::string config_path;
    /// Grid spacing; 0 selects min edge length / 128.
    double h = 0.0;
    /// Continuation levels; 0 keeps the solver default.
    int levels = 0;
    std::vector<std::string> stages;
    /// Largest mass-balance window half-width, in polygon diameters.
    double window_scale = 8.0;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    /// Stop at the first failed check.
    bool strict = false;
    int raster_resolution = 512;
    int monotone_pairs = 10000;
};

struct Check {
    std::string name;
    std::string stage;
    double measured = 0.0;
    std::string relation;  // "<=", ">=", "<", ">", "=="
    double threshold = 0.0;
    bool pass = false;
};

inline Check make_check(std::string name, Stage stage, double measured, std::string relation, double threshold) {
    Check c{std::move(name), to_string(stage), measured, std::move(relation), threshold, false};
    if (c.relation == "<=") c.pass = measured <= threshold;
    else if (c.relation == ">=") c.pass = measured >= threshold;
    else if (c.relation == "<") c.pass = measured < threshold;
    else if (c.relation == ">") c.pass = measured > threshold;
    else c.pass = measured == threshold;
    return c;
}

/// Non-finite measurements become null so the report stays valid JSON.
inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const Check& c) {
    return {{"name", c.name},
            {"stage", c.stage},
            {"measured", finite_or_null(c.measured)},
            {"relation", c.relation},
            {"threshold", finite_or_null(c.threshold)},
            {"pass", c.pass}};
}

struct FileRecord {
    std::string path;  // relative to the run directory
    std::uintmax_t bytes = 0;
    std::string checksum;
};

inline FileRecord file_record(const std::filesystem::path& dir, const std::string& name) {
    const std::string text = read_text((dir / name).string());
    return {name, std::uintmax_t(text.size()), hex64(fnv1a(text))};
}

struct RunResult {
    int exit_code = 0;
    nlohmann::json report;
    nlohmann::json manifest;
    std::vector<Check> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Raised by a failing check under --strict; the run is cut short there.
struct StrictStop {};

inline nlohmann::json module_versions() {
    return {{"gh_geometry", kVersion},
            {"ma_solver", kVersion},
            {"convex_analysis", kVersion},
            {"lagrangian_builder", kVersion},
            {"cli_harness", kVersion}};
}

inline nlohmann::json polygon_json(const Polygon& p) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : p) a.push_back({v.x(), v.y()});
    return a;
}

/// Runs the enabled stages. The config is parsed and validated before the
/// output directory is created, so a bad config leaves nothing behind.
/// Throws ConfigError / GridError for bad input and SolverError when the
/// solver does not converge; check failures are reported, not thrown.
inline RunResult run_pipeline(const RunOptions& opt) {
    namespace fs = std::filesystem;
    const ConfigDocument doc = load_config(opt.config_path);
    const Problem pb = validate_config(doc.config);
    const std::array<bool, 9> on = resolve_stages(opt.stages);
    const double h = opt.h > 0.0 ? opt.h : pb.min_edge_length() / 128.0;
    if (!grid_admissible(pb, h)) throw GridError("h = " + std::to_string(h) + " is not admissible for this polygon");
    if (!(opt.window_scale > 0.0)) throw ConfigError("window scale must be positive");
    if (opt.levels < 0) throw ConfigError("levels must be >= 1");
    const std::uint64_t seed = opt.seed.value_or(doc.seed);
    SolverParams params;
    if (opt.levels > 0) params.continuation_levels = opt.levels;

    const fs::path dir(opt.out_dir);
    fs::create_directories(dir);

    RunResult res;
    nlohmann::json results = nlohmann::json::object();
    nlohmann::json fits = nlohmann::json::object();
    nlohmann::json timings = nlohmann::json::object();
    std::vector<std::string> files;
    auto add_check = [&](Check c) {
        const bool failed = !c.pass;
        res.checks.push_back(std::move(c));
        if (failed && opt.strict) throw StrictStop{};
    };
    auto enabled = [&](Stage s) { return on[std::size_t(s)]; };

    write_text((dir / "config.json").string(), to_json(doc.config).dump(2) + "\n");
    files.push_back("config.json");

    const auto data = std::make_shared<const DirichletData>(make_dirichlet(pb));
    std::optional<PotentialField> field;
    std::optional<GradientField> grad;
    std::vector<VertexSubgradientSet> sets;
    std::optional<ReducedGraphMesh> mesh;
    std::vector<EndDiagnostics> ends;
    double lip = 0.0;

    auto timed = [&](Stage s, auto&& body) {
        if (!enabled(s)) return;
        const auto t0 = std::chrono::steady_clock::now();
        body();
        timings[to_string(s)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    bool stopped = false;
    try {
        timed(Stage::grid, [&] {
            const SolverGrid g = build_grid(*data, h, params.stencil_directions, params.scheme);
            int adjacent = 0;
            for (int n = 0; n < g.size(); ++n)
                if (g.kind[g.lattice_of[n]] == NodeKind::boundary_adjacent) ++adjacent;
            results["grid"] = {{"h", h}, {"unknowns", g.size()}, {"boundary_adjacent", adjacent},
                               {"max_cell_V", g.max_cell_V()}};
            add_check(make_check("grid.unknowns", Stage::grid, g.size(), ">", 0));
        });

        timed(Stage::solve, [&] {
            field = solve(data, h, params);
            export_solution(*field, (dir / "solution").string());
            files.push_back("solution.csv");
            files.push_back("solution.json");
            const BoundReport br = verify_bounds(*field);
            results["solve"] = solution_header(*field);
            results["bounds"] = to_json(br);
            add_check(make_check("solve.residual", Stage::solve, field->residual_inf, "<=", field->tol_residual));
            add_check(make_check("solve.convexity", Stage::solve, field->min_direction_curvature, ">=",
                                 -params.tol_convex));
            add_check(make_check("solve.boundary_barriers", Stage::solve,
                                 br.lower_violations + br.upper_violations, "==", 0));
        });

        timed(Stage::gradient, [&] {
            grad = gradient_field(*field);
            lip = interior_lipschitz(*field, *grad);
            const MonotonicityReport mono =
                monotonicity_check(*field->grid, *grad, opt.monotone_pairs, seed, 1e-9 * (1.0 + lip));
            const RayDecayReport ray = ray_decay(pb, grad->samples);
            results["gradient"] = {{"interior_lipschitz", lip},
                                   {"jacobian_symmetry_defect", grad->jacobian_symmetry_defect},
                                   {"monotone_pairs", mono.pairs},
                                   {"monotone_violations", mono.violations},
                                   {"monotone_min", finite_or_null(mono.min_value)},
                                   {"monotone_min_margin", finite_or_null(mono.min_margin)},
                                   {"ray_sufficient", ray.sufficient},
                                   {"ray_reason", ray.reason},
                                   {"ray_max_radius", ray.max_radius},
                                   {"ray_decades", ray.decades},
                                   {"ray_empirical_constant", ray.empirical_constant}};
            fits["ray_decay"] = {{"fit", to_json(ray.fit)},
                                 {"product_fit", to_json(ray.product_fit)},
                                 {"bin_radius", ray.bin_radius},
                                 {"bin_max_distance", ray.bin_max_distance}};
            add_check(make_check("gradient.monotone_violations", Stage::gradient, mono.violations, "==", 0));
            add_check(make_check("gradient.ray_decay_slope", Stage::gradient,
                                 ray.sufficient ? ray.fit.exponent : NAN, "<=", -0.8));
            add_check(make_check("gradient.ray_product_trend", Stage::gradient,
                                 ray.sufficient ? ray.product_fit.exponent : NAN, "<=", 0.0));
        });

        const Window window = default_window(pb, opt.window_scale);
        timed(Stage::subgradients, [&] {
            sets = subgradient_sets(*field, window);
            const SubgradientGeometry geo = subgradient_geometry(sets);
            nlohmann::json polys = nlohmann::json::array();
            for (const auto& s : sets)
                polys.push_back({{"vertex", s.vertex_index},
                                 {"constraints_total", s.constraints_total},
                                 {"supporting_constraints", s.half_planes.size()},
                                 {"area", area(s.polygon)},
                                 {"polygon", polygon_json(s.polygon)}});
            write_text((dir / "subgradients.json").string(),
                       nlohmann::json{{"window", {{"lo", {window.lo.x(), window.lo.y()}},
                                                  {"hi", {window.hi.x(), window.hi.y()}}}},
                                      {"sets", polys}}
                               .dump(2) +
                           "\n");
            files.push_back("subgradients.json");
            results["subgradients"] = to_json(geo);
            add_check(make_check("subgradients.wedge_excess", Stage::subgradients, geo.max_wedge_excess, "<=", 3.0 * h));
            add_check(make_check("subgradients.min_pair_distance", Stage::subgradients, geo.min_pair_distance, ">", 0.0));
        });

        timed(Stage::amoeba, [&] {
            const AmoebaRaster r = amoeba_raster(sets, window, opt.raster_resolution, opt.raster_resolution);
            write_pgm(r, (dir / "amoeba.pgm").string());
            write_text((dir / "amoeba.json").string(), amoeba_legend(r).dump(2) + "\n");
            files.push_back("amoeba.pgm");
            files.push_back("amoeba.json");
            results["amoeba"] = {{"undetermined_area", r.undetermined_area()},
                                 {"window_area", window.area()},
                                 {"double_classified", r.double_classified}};
            add_check(make_check("amoeba.double_classified", Stage::amoeba, r.double_classified, "==", 0));
        });

        timed(Stage::mass_balance, [&] {
            const double H = 0.5 * window.width();
            const MassBalanceReport mb = mass_balance(sets, pb.potential_integral(), window,
                                                      {0.125 * H, 0.25 * H, 0.5 * H, H});
            nlohmann::json entries = nlohmann::json::array();
            for (const auto& e : mb.entries)
                entries.push_back({{"half_width", e.half_width},
                                   {"window_area", e.window_area},
                                   {"subgradient_area", e.subgradient_area},
                                   {"image_area", e.image_area},
                                   {"relative_discrepancy", e.relative_discrepancy}});
            results["mass_balance"] = {{"integral", mb.integral}, {"entries", entries}, {"trend", mb.trend}};
            fits["mass_balance"] = entries;
            add_check(make_check("mass_balance.relative_discrepancy", Stage::mass_balance,
                                 mb.entries.back().relative_discrepancy, "<=", 0.05));
        });

        timed(Stage::mesh, [&] {
            mesh = build_reduced_graph(*field, *grad);
            for (const auto& f : export_mesh(*mesh, *field, (dir / "mesh").string()))
                files.push_back(fs::path(f).filename().string());
            const ResidualReport rr = sl_residual_report(*mesh, pb.diameter());
            results["mesh"] = to_json(rr);
            results["mesh"]["euler_characteristic"] = mesh->euler_characteristic();
            results["mesh"]["faces"] = mesh->face_count();
            results["mesh"]["min_face_quality"] = mesh->min_face_quality;
            add_check(make_check("mesh.euler_characteristic", Stage::mesh, mesh->euler_characteristic(), "==", 1));
            add_check(make_check("mesh.det_defect_median", Stage::mesh, rr.det_interior.median, "<=",
                                 rr.tolerances.det_median));
            add_check(make_check("mesh.curl_defect_median", Stage::mesh, rr.curl_interior.median, "<=",
                                 rr.tolerances.curl_median_per_h * rr.curl_scale));
        });

        timed(Stage::ends, [&] {
            ends = extract_ends(*field, *grad, mesh ? &*mesh : nullptr);
            nlohmann::json list = nlohmann::json::array();
            for (const auto& e : ends) list.push_back(to_json(e));
            results["ends"] = list;
            fits["ends"] = list;
            const double c_tol = 5.0 * std::sqrt(h) * lip;
            for (const auto& e : ends) {
                const std::string p = "ends." + std::to_string(e.edge) + ".";
                const EndLevel& last = e.levels.back();
                add_check(make_check(p + "normal_monotone", Stage::ends, e.normal_monotone ? 1 : 0, "==", 1));
                add_check(make_check(p + "normal_over_transverse", Stage::ends,
                                     last.normal_gradient / std::max(std::abs(last.transverse), 1e-300), ">", 10.0));
                add_check(make_check(p + "c_error", Stage::ends, std::abs(e.c_measured - e.c_expected), "<=", c_tol));
                add_check(make_check(p + "u1_exponent", Stage::ends, e.u1_fit.exponent, "<=", -1.6));
                add_check(make_check(p + "y2_exponent", Stage::ends, e.y2_fit.exponent, "<=", -0.8));
                if (e.has_exp_fit) {
                    add_check(make_check(p + "tail_rate", Stage::ends, e.exp_fit.rate, ">", 0.0));
                    add_check(make_check(p + "tail_rate_lower", Stage::ends, e.exp_fit.rate_lower, ">", 0.0));
                    add_check(make_check(p + "tail_r2", Stage::ends, e.exp_fit.r2, ">=", 0.9));
                }
            }
        });

        timed(Stage::appendix, [&] {
            const AppendixReport ap = appendix_constraint_check(ends);
            results["appendix"] = to_json(ap);
            add_check(make_check("appendix.sum", Stage::appendix, std::abs(ap.sum), "<=", ap.tolerance));
        });
    } catch (const StrictStop&) {
        stopped = true;
    }

    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t k = 0; k < on.size(); ++k)
        if (on[k]) stages.push_back(kStageNames[k]);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : res.checks) checks.push_back(to_json(c));

    nlohmann::json params_json = to_json(params);
    res.report = {{"version", kVersion},
                  {"config_hash", config_hash(doc.config)},
                  {"config", to_json(doc.config)},
                  {"seed", seed},
                  {"h", h},
                  {"window_scale", opt.window_scale},
                  {"solver_params", params_json},
                  {"stages", stages},
                  {"strict_stop", stopped},
                  {"checks", checks},
                  {"all_pass", res.all_pass()},
                  {"results", results}};
    write_text((dir / "report.json").string(), res.report.dump(2) + "\n");
    files.push_back("report.json");
    if (!fits.empty()) {
        write_text((dir / "fits.json").string(), fits.dump(2) + "\n");
        files.push_back("fits.json");
    }

    nlohmann::json file_list = nlohmann::json::array();
    for (const auto& f : files) {
        const FileRecord r = file_record(dir, f);
        file_list.push_back({{"path", r.path}, {"bytes", r.bytes}, {"fnv1a", r.checksum}});
    }
    nlohmann::json pass_fail = nlohmann::json::object();
    for (const auto& c : res.checks) pass_fail[c.name] = c.pass;
    res.manifest = {{"config_hash", config_hash(doc.config)},
                    {"solver_params", params_json},
                    {"module_versions", module_versions()},
                    {"files", file_list},
                    {"stage_seconds", timings},
                    {"checks", pass_fail}};
    write_text((dir / "manifest.json").string(), res.manifest.dump(2) + "\n");
    res.exit_code = res.all_pass() ? 0 : 1;
    return res;
}

struct ManifestAudit {
    int files = 0;
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

/// Every file listed in the manifest exists with the recorded size and checksum.
inline ManifestAudit audit_manifest(const std::string& run_dir) {
    namespace fs = std::filesystem;
    ManifestAudit a;
    const nlohmann::json m = nlohmann::json::parse(read_text((fs::path(run_dir) / "manifest.json").string()));
    for (const auto& f : m.at("files")) {
        ++a.files;
        const std::string name = f.at("path").get<std::string>();
        const fs::path p = fs::path(run_dir) / name;
        if (!fs::exists(p)) {
            a.problems.push_back(name + ": missing");
            continue;
        }
        const FileRecord r = file_record(run_dir, name);
        if (r.bytes != f.at("bytes").get<std::uintmax_t>()) a.problems.push_back(name + ": size differs");
        if (r.checksum != f.at("fnv1a").get<std::string>()) a.problems.push_back(name + ": checksum differs");
    }
    return a;
}

// ---------------------------------------------------------------------------
// Comparing runs

/// A solved field rebuilt from a run directory (config.json + solution.*).
inline PotentialField load_run_field(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const ConfigDocument doc = load_config((fs::path(run_dir) / "config.json").string());
    const Problem pb = validate_config(doc.config);
    const SolutionFile sol = load_solution((fs::path(run_dir) / "solution").string());
    PotentialField f;
    f.data = std::make_shared<const DirichletData>(make_dirichlet(pb));
    const double h = sol.header.at("h").get<double>();
    f.grid = std::make_shared<const SolverGrid>(build_grid(*f.data, h));
    if (f.grid->size() != int(sol.values.size()))
        throw Error("solution in " + run_dir + " does not match its grid");
    f.values = sol.values;
    f.residual_inf = sol.header.at("residual_inf").get<double>();
    f.tol_residual = sol.header.at("tol_residual").get<double>();
    f.converged = true;
    return f;
}

struct CheckDelta {
    std::string name;
    double a = NAN, b = NAN;
    bool pass_a = false, pass_b = false;
};

struct EndDelta {
    int edge = 0;
    double measured = 0.0;   // c_measured(B) - c_measured(A)
    double telescoped = 0.0; // (b_{i+1} - b_i)(B) - (b_{i+1} - b_i)(A)
    double tolerance = 0.0;  // c_error(A) + c_error(B)
    bool pass = false;
};

struct RunComparison {
    std::string mode;  // "common_grid" or "resampled"
    double sup_difference = 0.0;
    int compared_nodes = 0;
    std::vector<CheckDelta> checks;
    std::vector<EndDelta> ends;
};

/// Sup-norm difference of the two solutions and a check-by-check table.
/// Solutions on the same grid are compared node by node; otherwise B is
/// interpolated at the nodes of A that lie at least 2 h_B inside its polygon.
inline RunComparison compare_runs(const std::string& dir_a, const std::string& dir_b) {
    namespace fs = std::filesystem;
    RunComparison c;
    const PotentialField fa = load_run_field(dir_a), fb = load_run_field(dir_b);
    const SolverGrid &ga = *fa.grid, &gb = *fb.grid;
    const bool same = ga.h == gb.h && ga.i0 == gb.i0 && ga.j0 == gb.j0 && ga.nx == gb.nx && ga.ny == gb.ny &&
                      ga.lattice_of == gb.lattice_of;
    if (same) {
        c.mode = "common_grid";
        for (int n = 0; n < ga.size(); ++n)
            c.sup_difference = std::max(c.sup_difference, std::abs(fa.values[n] - fb.values[n]));
        c.compared_nodes = ga.size();
    } else {
        c.mode = "resampled";
        const Problem& pb = fb.problem();
        for (int n = 0; n < ga.size(); ++n) {
            const Point u = ga.position(n);
            if (pb.distance_to_boundary(u) < 2.0 * gb.h) continue;
            c.sup_difference = std::max(c.sup_difference, std::abs(fa.values[n] - sample(fb, u)));
            ++c.compared_nodes;
        }
    }

    const nlohmann::json ra = nlohmann::json::parse(read_text((fs::path(dir_a) / "report.json").string()));
    const nlohmann::json rb = nlohmann::json::parse(read_text((fs::path(dir_b) / "report.json").string()));
    std::map<std::string, CheckDelta> table;
    auto value = [](const nlohmann::json& j) { return j.is_number() ? j.get<double>() : NAN; };
    for (const auto& ch : ra.at("checks")) {
        auto& d = table[ch.at("name").get<std::string>()];
        d.name = ch.at("name").get<std::string>();
        d.a = value(ch.at("measured"));
        d.pass_a = ch.at("pass").get<bool>();
    }
    for (const auto& ch : rb.at("checks")) {
        auto& d = table[ch.at("name").get<std::string>()];
        d.name = ch.at("name").get<std::string>();
        d.b = value(ch.at("measured"));
        d.pass_b = ch.at("pass").get<bool>();
    }
    for (auto& [name, d] : table) c.checks.push_back(d);

    const auto& res_a = ra.at("results");
    const auto& res_b = rb.at("results");
    if (res_a.contains("ends") && res_b.contains("ends") && res_a.at("ends").size() == res_b.at("ends").size()) {
        for (std::size_t i = 0; i < res_a.at("ends").size(); ++i) {
            const auto& ea = res_a.at("ends")[i];
            const auto& eb = res_b.at("ends")[i];
            EndDelta d;
            d.edge = int(i);
            d.measured = eb.at("c_measured").get<double>() - ea.at("c_measured").get<double>();
            d.telescoped = eb.at("c_expected").get<double>() - ea.at("c_expected").get<double>();
            d.tolerance = ea.at("c_error").get<double>() + eb.at("c_error").get<double>();
            d.pass = std::abs(d.measured - d.telescoped) <= d.tolerance;
            c.ends.push_back(d);
        }
    }
    return c;
}

inline nlohmann::json to_json(const RunComparison& c) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& d : c.checks)
        checks.push_back({{"name", d.name},
                          {"a", finite_or_null(d.a)},
                          {"b", finite_or_null(d.b)},
                          {"delta", finite_or_null(d.b - d.a)},
                          {"pass_a", d.pass_a},
                          {"pass_b", d.pass_b}});
    nlohmann::json ends = nlohmann::json::array();
    for (const auto& e : c.ends)
        ends.push_back({{"edge", e.edge},
                        {"delta_c_measured", e.measured},
                        {"delta_c_telescoped", e.telescoped},
                        {"tolerance", e.tolerance},
                        {"pass", e.pass}});
    return {{"mode", c.mode},
            {"sup_difference", c.sup_difference},
            {"compared_nodes", c.compared_nodes},
            {"checks", checks},
            {"ends", ends}};
}

} // namespace maslag
