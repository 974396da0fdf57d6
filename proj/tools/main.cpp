#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "bwler/grid.hpp"
#include "bwler/types.hpp"
#include "commands.hpp"

using namespace bwler;
using namespace bwler::cli;

namespace {

int fail(const GlobalOptions& opts, int code, const std::string& kind, const std::string& message) {
    nlohmann::ordered_json rec{{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}};
    std::cerr << rec.dump() << '\n';
    std::error_code ec;
    std::filesystem::create_directories(opts.out, ec);
    if (!ec) {
        std::ofstream out(opts.out / "error.json");
        if (out) out << rec.dump(2) << '\n';
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bwler: barycentric interpolation models for PDE benchmarks"};
    app.fallthrough();
    app.require_subcommand(1);

    GlobalOptions opts;
    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    std::size_t max_steps = 0;
    app.add_option("--config", config_path, "INI config, or a report.json to re-run");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides run.seed)");
    app.add_option("--jobs", opts.jobs, "parallel stencil runs for decompose")->check(CLI::PositiveNumber);
    auto* steps_opt = app.add_option("--max-steps", max_steps, "cap on steps per stage");
    app.add_flag("--quiet", opts.quiet, "no progress lines");

    auto* solve = app.add_subcommand("solve", "train on a benchmark PDE");
    std::string problem;
    solve->add_option("--problem", problem, "benchmark name (overrides run.problem)");
    auto* interp = app.add_subcommand("interp", "fit a 1D target by least squares");
    auto* probe = app.add_subcommand("probe", "theory probes: gram, lebesgue, collocation, eps_op");
    std::string probe_kind, probe_n, probe_stencil, probe_basis;
    std::size_t probe_m = 0, probe_seeds = 0, probe_trials = 0;
    probe->add_option("kind", probe_kind, "gram | lebesgue | collocation | eps_op");
    probe->add_option("--n", probe_n, "N, or a comma list");
    probe->add_option("--m", probe_m, "samples (gram)");
    probe->add_option("--seeds", probe_seeds, "number of seeds (gram)");
    probe->add_option("--trials", probe_trials, "Monte-Carlo trials (eps_op)");
    probe->add_option("--stencil", probe_stencil, "surrogate derivative, e.g. fd:1 (eps_op)");
    probe->add_option("--basis", probe_basis, "chebyshev | fourier (eps_op)");
    auto* decompose = app.add_subcommand("decompose", "stencil sweep on a linear benchmark");
    auto* list = app.add_subcommand("list-problems", "print the built-in benchmarks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(opts, 2, "config", e.what());
    }
    opts.out = out_dir;
    if (seed_opt->count()) opts.seed = seed;
    if (steps_opt->count()) opts.max_steps = max_steps;

    try {
        if (list->parsed()) {
            list_problems(std::cout);
            return 0;
        }
        Config cfg = config_path.empty() ? Config{} : Config::parse_file(config_path);
        if (solve->parsed()) {
            if (!problem.empty()) cfg.set("run", "problem", problem);
            run_solve(cfg, opts);
        } else if (interp->parsed()) {
            run_interp(cfg, opts);
        } else if (probe->parsed()) {
            if (!probe_kind.empty()) cfg.set("probe", "kind", probe_kind);
            if (!probe_n.empty()) cfg.set("probe", "n", probe_n);
            if (probe_m) cfg.set("probe", "m", std::to_string(probe_m));
            if (probe_seeds) cfg.set("probe", "seeds", std::to_string(probe_seeds));
            if (probe_trials) cfg.set("probe", "trials", std::to_string(probe_trials));
            if (!probe_stencil.empty()) cfg.set("probe", "stencil", probe_stencil);
            if (!probe_basis.empty()) cfg.set("probe", "basis", probe_basis);
            run_probe(cfg, opts);
        } else if (decompose->parsed()) {
            run_decompose(cfg, opts);
        }
    } catch (const ConfigError& e) {
        return fail(opts, 2, "config", e.what());
    } catch (const NumericalError& e) {
        return fail(opts, 3, "numerical", e.what());
    } catch (const DomainError& e) {
        return fail(opts, 2, "domain", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(opts, 2, "config", e.what());
    } catch (const std::exception& e) {
        return fail(opts, 1, "runtime", e.what());
    }
    return 0;
}
