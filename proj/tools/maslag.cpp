// maslag: solve the reduced Monge-Ampere problem for a monopole configuration
// and write the analysis artifacts.
//
//   maslag --config configs/equilateral.json --out runs/eq
//   maslag --config cfg.json --stage solve --h 0.01
//   maslag compare runs/a runs/b
//
// Exit codes: 0 all enabled checks pass, 1 a check failed (report written),
// 2 invalid config or flags (nothing written), 3 solver did not converge,
// 4 other errors (I/O, diagnostics).

#include "maslag/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int run(const maslag::RunOptions& opt) {
    try {
        const maslag::RunResult r = maslag::run_pipeline(opt);
        int failed = 0;
        for (const auto& c : r.checks)
            if (!c.pass) {
                ++failed;
                std::fprintf(stderr, "FAIL %s: measured %.6g, need %s %.6g\n", c.name.c_str(), c.measured,
                             c.relation.c_str(), c.threshold);
            }
        std::printf("%d checks, %d failed; report in %s/report.json\n", int(r.checks.size()), failed,
                    opt.out_dir.c_str());
        return r.exit_code;
    } catch (const maslag::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const maslag::GridError& e) {
        std::fprintf(stderr, "grid error: %s\n", e.what());
        return 2;
    } catch (const maslag::DomainError& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return 2;
    } catch (const maslag::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}

int compare(const std::string& a, const std::string& b, const std::string& out) {
    try {
        const auto c = maslag::compare_runs(a, b);
        const std::string text = maslag::to_json(c).dump(2) + "\n";
        if (out.empty()) std::cout << text;
        else maslag::write_text(out, text);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced special Lagrangian pipeline for Gibbons-Hawking monopole configurations"};
    app.set_help_flag("--help", "Print this help and exit");
    app.set_version_flag("--version", maslag::kVersion);

    maslag::RunOptions opt;
    app.add_option("--config", opt.config_path, "Config JSON (points, b, A, seed)");
    app.add_option("--h", opt.h, "Grid spacing (default: min edge length / 128)");
    app.add_option("--levels", opt.levels, "Continuation levels")->check(CLI::PositiveNumber);
    app.add_option("--stage", opt.stages, "Stages to run, comma separated (default: all)")->delimiter(',');
    app.add_option("--window-scale", opt.window_scale, "Largest y-window half-width in diameters");
    app.add_option("--out", opt.out_dir, "Artifact directory");
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized checks (default: config seed)");
    app.add_flag("--strict", opt.strict, "Stop at the first failed check");

    std::string dir_a, dir_b, cmp_out;
    CLI::App* cmp = app.add_subcommand("compare", "Compare two run directories");
    cmp->add_option("run_a", dir_a, "First run directory")->required();
    cmp->add_option("run_b", dir_b, "Second run directory")->required();
    cmp->add_option("--out", cmp_out, "Write the comparison JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (cmp->parsed()) return compare(dir_a, dir_b, cmp_out);
    if (opt.config_path.empty()) {
        std::fprintf(stderr, "config error: --config is required\n");
        return 2;
    }
    if (*seed_opt) opt.seed = seed;
    return run(opt);
}
