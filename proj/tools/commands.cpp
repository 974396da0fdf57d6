#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "bwler/analysis.hpp"

namespace bwler::cli {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

const std::set<std::string> kRunKeys{"problem", "seed", "max_steps", "log_every", "test_points", "reference"};

template <class F>
auto as_config_error(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::uint64_t resolve_seed(Config& cfg, const GlobalOptions& o) {
    const std::uint64_t seed = o.seed ? *o.seed : cfg.get_size("run", "seed", 0);
    cfg.set("run", "seed", std::to_string(seed));
    return seed;
}

std::optional<std::size_t> resolve_max_steps(Config& cfg, const GlobalOptions& o) {
    if (o.max_steps) cfg.set("run", "max_steps", std::to_string(*o.max_steps));
    if (!cfg.get("run", "max_steps")) return std::nullopt;
    return cfg.get_size("run", "max_steps", 0);
}

std::unique_ptr<PdeProblem> build_problem(const Config& cfg, const std::string& fallback) {
    const std::string name = cfg.get_string("run", "problem", fallback);
    if (name.empty()) throw ConfigError("config: run.problem is required");
    std::map<std::string, double> params;
    for (const auto& [k, v] : cfg.section("params")) params[k] = parse_double(v, "params." + k);
    return as_config_error([&] { return make_problem(name, params); });
}

TensorGrid build_grid(const Config& cfg, const PdeProblem& problem, const std::vector<std::size_t>& n_override = {}) {
    const TensorGrid def = problem.default_grid();
    const auto n = n_override.empty() ? cfg.get_size_list("grid", "n") : n_override;
    const auto basis = cfg.get_list("grid", "basis");
    if (n.empty() && basis.empty()) return def;
    if (!n.empty() && n.size() != def.dims()) throw ConfigError("grid.n: expected one size per axis");
    if (!basis.empty() && basis.size() != def.dims()) throw ConfigError("grid.basis: expected one basis per axis");
    std::vector<Grid1D> axes;
    for (std::size_t a = 0; a < def.dims(); ++a) {
        const Basis b = basis.empty() ? def.axis(a).basis() : as_config_error([&] { return parse_basis(basis[a]); });
        axes.emplace_back(b, n.empty() ? def.axis(a).n() : n[a], def.axis(a).interval());
    }
    return as_config_error([&] { return TensorGrid(axes); });
}

std::vector<DiffOperator> build_deriv(const Config& cfg, const PdeProblem& problem, const TensorGrid& grid) {
    auto deriv = problem.default_deriv(grid);
    const auto names = problem.axis_names();
    for (const auto& [k, v] : cfg.section("deriv")) {
        const auto it = std::find(names.begin(), names.end(), k);
        if (it == names.end()) throw ConfigError("config: unknown key 'deriv." + k + "'");
        const auto a = static_cast<std::size_t>(it - names.begin());
        deriv[a] = as_config_error([&] { return parse_diff_operator(v, grid.axis(a)); });
    }
    return deriv;
}

const std::map<std::string, std::set<std::string>> kStageKeys{
    {"gd", {"kind", "steps", "step", "grad_tol", "grid"}},
    {"adam", {"kind", "steps", "lr0", "lr_min", "grid"}},
    {"nncg", {"kind", "steps", "rank", "cg_iters", "damping", "line_search", "hvp", "precond_every", "seed", "grid"}},
};

struct StagePlan {
    std::vector<Stage> stages;
    json echo = json::array();
};

// Stages from [stage.N] sections (numeric order) or a single [optimizer].
StagePlan build_stages(const Config& cfg, const SolverDefaults& fallback, std::uint64_t seed,
                       std::optional<std::size_t> max_steps,
                       const std::function<std::pair<TensorGrid, std::vector<DiffOperator>>(const std::vector<std::size_t>&)>& regrid) {
    std::vector<std::pair<std::size_t, std::string>> names;
    for (const auto& s : cfg.sections_with_prefix("stage."))
        names.emplace_back(parse_size(s.substr(6), "stage section [" + s + "]"), s);
    std::sort(names.begin(), names.end());
    if (!names.empty() && cfg.has("optimizer")) throw ConfigError("config: use either [optimizer] or [stage.N], not both");
    if (cfg.has("optimizer")) names.emplace_back(0, "optimizer");

    StagePlan plan;
    auto one = [&](const std::string& sec) {
        const std::string kind = cfg.get_string(sec, "kind", fallback.optimizer);
        const auto keys = kStageKeys.find(kind);
        if (keys == kStageKeys.end()) throw ConfigError(sec + ".kind: unknown optimizer '" + kind + "'");
        cfg.check_keys(sec, keys->second);
        Stage st;
        st.steps = cfg.get_size(sec, "steps", fallback.steps);
        if (max_steps) st.steps = std::min(st.steps, *max_steps);
        json e{{"kind", kind}, {"steps", st.steps}};
        if (kind == "gd") {
            GdConfig g;
            const std::string step = cfg.get_string(sec, "step", "auto");
            g.step = step == "auto" ? StepSize::Auto() : StepSize::Fixed(parse_double(step, sec + ".step"));
            g.grad_tol = cfg.get_double(sec, "grad_tol", 0.0);
            e["step"] = step;
            e["grad_tol"] = g.grad_tol;
            st.optimizer = g;
        } else if (kind == "adam") {
            AdamConfig a;
            a.lr0 = cfg.get_double(sec, "lr0", a.lr0);
            a.lr_min = cfg.get_double(sec, "lr_min", a.lr_min);
            e["lr0"] = a.lr0;
            e["lr_min"] = a.lr_min;
            st.optimizer = a;
        } else {
            NncgConfig c;
            c.rank = cfg.get_size(sec, "rank", fallback.rank ? fallback.rank : c.rank);
            c.cg_iters = cfg.get_size(sec, "cg_iters", fallback.cg_iters ? fallback.cg_iters : c.cg_iters);
            c.damping = cfg.get_double(sec, "damping", c.damping);
            const std::string ls = cfg.get_string(sec, "line_search", "backtracking");
            if (ls == "backtracking") c.line_search = LineSearch::Backtracking;
            else if (ls == "none") c.line_search = LineSearch::None;
            else throw ConfigError(sec + ".line_search: expected backtracking or none");
            const std::string hvp = cfg.get_string(sec, "hvp", "gauss_newton");
            if (hvp == "gauss_newton") c.hvp_mode = HvpMode::GaussNewton;
            else if (hvp == "exact") c.hvp_mode = HvpMode::Exact;
            else throw ConfigError(sec + ".hvp: expected gauss_newton or exact");
            c.precond_every = cfg.get_size(sec, "precond_every", c.precond_every);
            c.seed = cfg.get_size(sec, "seed", seed);
            e["rank"] = c.rank;
            e["cg_iters"] = c.cg_iters;
            e["damping"] = c.damping;
            e["line_search"] = ls;
            e["hvp"] = hvp;
            e["precond_every"] = c.precond_every;
            e["seed"] = c.seed;
            st.optimizer = c;
        }
        if (const auto n = cfg.get_size_list(sec, "grid"); !n.empty()) {
            auto [g, d] = regrid(n);
            st.grid = g;
            st.deriv = d;
            e["grid"] = n;
        }
        plan.stages.push_back(st);
        plan.echo.push_back(e);
    };
    for (const auto& [idx, sec] : names) one(sec);
    if (names.empty()) one("optimizer");  // absent section: defaults only
    return plan;
}

json grid_json(const TensorGrid& g, const std::vector<DiffOperator>& deriv) {
    json axes = json::array();
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const auto& ax = g.axis(a);
        axes.push_back({{"basis", to_string(ax.basis())},
                        {"n", ax.n()},
                        {"interval", {ax.interval().a, ax.interval().b}},
                        {"deriv", deriv.empty() ? "spectral" : to_string(deriv[a])}});
    }
    return axes;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<TheoryProbe> axis_lebesgue(const TensorGrid& g) {
    std::vector<TheoryProbe> out;
    for (const auto& ax : g.axes()) {
        TheoryProbe p;
        p.kind = "lebesgue:" + to_string(ax.basis());
        p.n = ax.n();
        p.lebesgue = lebesgue_constant(ax, std::max<std::size_t>(10 * ax.size(), 2048));
        out.push_back(p);
    }
    return out;
}

using PointFn = std::function<double(double)>;

PointFn interp_target(const std::string& name, double k) {
    if (name == "sin") return [k](double x) { return std::sin(k * x); };
    if (name == "cos") return [k](double x) { return std::cos(k * x); };
    if (name == "exp") return [k](double x) { return std::exp(k * x); };
    if (name == "tanh") return [k](double x) { return std::tanh(k * x); };
    if (name == "runge") return [k](double x) { return 1.0 / (1.0 + k * k * x * x); };
    if (name == "abs") return [](double x) { return std::abs(x); };
    throw ConfigError("interp.target: expected sin, cos, exp, tanh, runge or abs");
}

}  // namespace

void run_solve(Config cfg, const GlobalOptions& opts) {
    cfg.check_sections({"run", "params", "grid", "deriv", "loss", "optimizer", "stage."});
    cfg.check_keys("run", kRunKeys);
    cfg.check_keys("grid", {"n", "basis"});
    cfg.check_keys("loss", {"lambda_ibc", "collocation", "count"});
    const auto seed = resolve_seed(cfg, opts);
    const auto max_steps = resolve_max_steps(cfg, opts);
    const auto problem = build_problem(cfg, "");
    const TensorGrid grid = build_grid(cfg, *problem);
    const auto deriv = build_deriv(cfg, *problem, grid);
    const double lambda = cfg.get_double("loss", "lambda_ibc", problem->default_lambda_ibc());
    if (!(lambda > 0.0)) throw ConfigError("loss.lambda_ibc must be positive");
    const CollocationScheme scheme{
        as_config_error([&] { return parse_collocation_kind(cfg.get_string("loss", "collocation", "nodal")); }),
        cfg.get_size("loss", "count", 0), seed};
    if (scheme.kind != CollocationKind::Nodal && scheme.count == 0)
        throw ConfigError("loss.count is required for non-nodal collocation");

    auto regrid = [&](const std::vector<std::size_t>& n) {
        const TensorGrid g = build_grid(cfg, *problem, n);
        return std::make_pair(g, build_deriv(cfg, *problem, g));
    };
    const auto plan = build_stages(cfg, problem->default_solver(), seed, max_steps, regrid);

    std::function<double(const BwlerModel&)> l2re_fn;
    RowMat test;
    Vec truth;
    if (const auto ref = cfg.get("run", "reference")) {
        const auto data = load_reference(*ref);
        test = data.points;
        truth = data.values;
    } else if (problem->has_exact()) {
        test = test_points(*problem, cfg.get_size("run", "test_points", 256));
        truth = exact_solution(*problem, test);
    }
    if (truth.size() > 0) l2re_fn = [&](const BwlerModel& m) { return l2re(to_vec(m.evaluate(test)), truth); };

    TrainOptions to;
    to.log_every = cfg.get_size("run", "log_every", 100);
    to.l2re = l2re_fn;
    to.progress = !opts.quiet;
    auto factory = [&](const BwlerModel& m) {
        return build_objective(*problem, m, lambda, collocation_points(*problem, m.grid(), scheme));
    };
    const auto t0 = Clock::now();
    TrainState st = run_stages(plan.stages, BwlerModel(grid, deriv), factory, to);
    const double secs = seconds_since(t0);

    ExperimentReport rep;
    rep.seed = seed;
    json params = json::object();
    for (const auto& [k, v] : problem->parameters()) params[k] = v;
    rep.config = {{"subcommand", "solve"},
                  {"ini", cfg.to_json()},
                  {"resolved",
                   {{"problem", problem->name()},
                    {"params", params},
                    {"grid", grid_json(grid, deriv)},
                    {"lambda_ibc", lambda},
                    {"collocation", {{"kind", to_string(scheme.kind)}, {"count", scheme.count}, {"seed", scheme.seed}}},
                    {"stages", plan.echo}}}};
    rep.traces.push_back(make_trace("main", st));
    rep.metrics["final_loss"] = st.loss.back();
    rep.metrics["iterations"] = static_cast<double>(st.iteration);
    const auto final_obj = factory(st.model);
    for (const auto& [group, v] : final_obj.breakdown(st.model.theta())) rep.metrics["loss." + group] = v;
    if (!st.l2re.empty()) rep.metrics["l2re"] = st.l2re.back().l2re;
    rep.runtime["seconds"] = secs;
    rep.runtime["seconds_per_iteration"] = st.iteration ? secs / static_cast<double>(st.iteration) : 0.0;
    rep.probes = axis_lebesgue(st.model.grid());
    json starts = json::array();
    for (auto s : st.stage_starts) starts.push_back(s);
    rep.tables["run"] = {{"stop_reason", st.stop_reason.empty() ? "step budget" : st.stop_reason},
                         {"stage_starts", starts},
                         {"final_grid", grid_json(st.model.grid(), st.model.deriv_config())}};
    write_report(rep, opts.out);
    save_checkpoint(st.model, opts.out / "model.ckpt");
    std::printf("solve %s: %zu iterations, loss %.6e", problem->name().c_str(), st.iteration, st.loss.back());
    if (!st.l2re.empty()) std::printf(", l2re %.6e", st.l2re.back().l2re);
    std::printf(" (%.1f s)\n", secs);
}

void run_interp(Config cfg, const GlobalOptions& opts) {
    cfg.check_sections({"run", "interp", "optimizer", "stage."});
    cfg.check_keys("run", {"seed", "max_steps", "log_every"});
    cfg.check_keys("interp", {"target", "freq", "n", "m", "samples", "test", "sweep"});
    const auto seed = resolve_seed(cfg, opts);
    const auto max_steps = resolve_max_steps(cfg, opts);
    const std::string target_name = cfg.get_string("interp", "target", "sin");
    const double freq = cfg.get_double("interp", "freq", 4.0);
    const auto f = interp_target(target_name, freq);
    const std::size_t n = cfg.get_size("interp", "n", 40);
    const std::size_t m = cfg.get_size("interp", "m", 100);
    const std::size_t ntest = cfg.get_size("interp", "test", 1000);
    if (n < 1 || m < 1 || ntest < 2) throw ConfigError("interp: need n >= 1, m >= 1 and test >= 2");
    const auto kind = as_config_error([&] { return parse_collocation_kind(cfg.get_string("interp", "samples", "uniform")); });
    if (kind == CollocationKind::Nodal) throw ConfigError("interp.samples: nodal sampling is not a fitting problem");

    std::vector<double> xt(ntest);
    for (std::size_t i = 0; i < ntest; ++i) xt[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(ntest - 1);
    RowMat test = to_vec(xt);
    Vec truth(test.rows());
    for (Eigen::Index i = 0; i < truth.size(); ++i) truth(i) = f(test(i, 0));

    const SolverDefaults fallback{"gd", 100000, 0, 0};
    TrainOptions to;
    to.log_every = cfg.get_size("run", "log_every", 100);
    to.l2re = [&](const BwlerModel& model) { return l2re(to_vec(model.evaluate(test)), truth); };

    struct Fit {
        TrainState state;
        json stages;
    };
    auto fit = [&](std::size_t nn, bool progress) {
        const TensorGrid grid({Grid1D::chebyshev(nn)});
        const RowMat pts = sample_collocation({kind, m, seed}, grid);
        Vec y(pts.rows());
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = f(pts(i, 0));
        auto regrid = [&](const std::vector<std::size_t>& g) {
            if (g.size() != 1) throw ConfigError("stage grid: interp models have one axis");
            const TensorGrid tg({Grid1D::chebyshev(g[0])});
            return std::make_pair(tg, std::vector<DiffOperator>{DiffOperator::spectral_for(tg.axis(0))});
        };
        const auto plan = build_stages(cfg, fallback, seed, max_steps, regrid);
        TrainOptions o = to;
        o.progress = progress && !opts.quiet;
        auto factory = [&](const BwlerModel& model) { return interpolation_objective(model, pts, y); };
        return Fit{run_stages(plan.stages, BwlerModel(grid), factory, o), plan.echo};
    };

    const auto t0 = Clock::now();
    const Fit main = fit(n, true);
    ExperimentReport rep;
    rep.seed = seed;
    rep.config = {{"subcommand", "interp"},
                  {"ini", cfg.to_json()},
                  {"resolved",
                   {{"target", target_name}, {"freq", freq}, {"n", n}, {"m", m}, {"samples", to_string(kind)},
                    {"test", ntest}, {"stages", main.stages}}}};
    rep.traces.push_back(make_trace("main", main.state));
    rep.metrics["final_loss"] = main.state.loss.back();
    rep.metrics["l2re"] = main.state.l2re.back().l2re;
    rep.metrics["iterations"] = static_cast<double>(main.state.iteration);

    const TensorGrid g1({Grid1D::chebyshev(n)});
    const RowMat pts = sample_collocation({kind, m, seed}, g1);
    const Mat l = interpolation_matrix(g1.axis(0), std::span<const double>(pts.data(), static_cast<std::size_t>(pts.rows())));
    TheoryProbe probe;
    probe.kind = "interp";
    probe.n = n;
    probe.m = m;
    probe.kappa_sq = kappa_sq(l);
    probe.lebesgue = lebesgue_constant(g1.axis(0), std::max<std::size_t>(10 * (n + 1), 2048));
    probe.m_f = truth.cwiseAbs().maxCoeff();

    if (const auto sweep = cfg.get_size_list("interp", "sweep"); !sweep.empty()) {
        std::string csv = "n,l2re,final_loss,iterations\n";
        std::vector<double> ns, errs;
        for (auto nn : sweep) {
            const Fit r = fit(nn, false);
            const double e = r.state.l2re.back().l2re;
            ns.push_back(static_cast<double>(nn));
            errs.push_back(e);
            csv += std::to_string(nn) + "," + fmt(e) + "," + fmt(r.state.loss.back()) + "," + std::to_string(r.state.iteration) + "\n";
        }
        probe.rho_fit = rho_fit(ns, errs);
        json table = json::array();
        for (std::size_t i = 0; i < ns.size(); ++i) table.push_back({{"n", sweep[i]}, {"l2re", errs[i]}});
        rep.tables["convergence"] = table;
        std::filesystem::create_directories(opts.out);
        write_text(opts.out / "convergence.csv", csv);
    }
    rep.probes.push_back(probe);
    rep.runtime["seconds"] = seconds_since(t0);
    write_report(rep, opts.out);
    save_checkpoint(main.state.model, opts.out / "model.ckpt");
    std::printf("interp %s(%gx), N=%zu, M=%zu: loss %.6e, l2re %.6e\n", target_name.c_str(), freq, n, m,
                main.state.loss.back(), main.state.l2re.back().l2re);
}

void run_probe(Config cfg, const GlobalOptions& opts) {
    cfg.check_sections({"run", "probe", "params", "grid", "deriv"});
    cfg.check_keys("run", {"problem", "seed"});
    cfg.check_keys("grid", {"n", "basis"});
    cfg.check_keys("probe", {"kind", "n", "m", "seeds", "sampler", "resolution", "dirichlet", "basis", "order",
                             "stencil", "reference", "trials", "dense", "decay"});
    const auto seed = resolve_seed(cfg, opts);
    const std::string kind = cfg.get_string("probe", "kind", "");
    ExperimentReport rep;
    rep.seed = seed;
    std::filesystem::create_directories(opts.out);
    const auto t0 = Clock::now();

    if (kind == "gram") {
        const std::size_t n = cfg.get_size("probe", "n", 16);
        const std::size_t m = cfg.get_size("probe", "m", 4000);
        const std::size_t seeds = cfg.get_size("probe", "seeds", 1);
        const auto sampler = as_config_error([&] { return parse_collocation_kind(cfg.get_string("probe", "sampler", "uniform")); });
        if (n < 1 || m < 1 || seeds < 1) throw ConfigError("probe: need n, m, seeds >= 1");
        const TensorGrid grid({Grid1D::chebyshev(n)});
        std::vector<double> ks;
        std::string csv = "seed,kappa_sq_emp\n";
        double pop = 0.0;
        for (std::size_t s = 0; s < seeds; ++s) {
            const RowMat pts = sample_collocation({sampler, m, seed + s}, grid);
            const auto gm = gram_matrices(
                interpolation_matrix(grid.axis(0), std::span<const double>(pts.data(), static_cast<std::size_t>(pts.rows()))), n);
            ks.push_back(gm.kappa_sq_emp);
            pop = gm.kappa_sq_pop;
            csv += std::to_string(seed + s) + "," + fmt(gm.kappa_sq_emp) + "\n";
        }
        auto sorted = ks;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t h = sorted.size() / 2;
        const double median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
        rep.metrics["kappa_sq_emp"] = median;
        rep.metrics["kappa_sq_pop"] = pop;
        rep.metrics["kappa_sq_pop_exact"] = condition_number_sym(population_gram_exact(n));
        rep.metrics["fraction_le_3"] =
            static_cast<double>(std::count_if(ks.begin(), ks.end(), [](double k) { return k <= 3.0; })) / static_cast<double>(ks.size());
        TheoryProbe p;
        p.kind = "gram";
        p.n = n;
        p.m = m;
        p.kappa_sq = median;
        rep.probes.push_back(p);
        write_text(opts.out / "gram.csv", csv);
        std::printf("gram N=%zu M=%zu seeds=%zu: kappa_sq_emp %.6g (median), kappa_sq_pop %.6g\n", n, m, seeds, median, pop);
    } else if (kind == "lebesgue") {
        auto ns = cfg.get_size_list("probe", "n");
        if (ns.empty()) ns = {2, 4, 8, 16, 32, 64};
        const std::size_t res = cfg.get_size("probe", "resolution", 0);
        std::string csv = "n,lebesgue\n";
        for (auto n : ns) {
            const Grid1D g = Grid1D::chebyshev(n);
            const double l = as_config_error([&] { return lebesgue_constant(g, res ? res : std::max<std::size_t>(10 * (n + 1), 2048)); });
            TheoryProbe p;
            p.kind = "lebesgue";
            p.n = n;
            p.lebesgue = l;
            rep.probes.push_back(p);
            rep.metrics["lebesgue." + std::to_string(n)] = l;
            csv += std::to_string(n) + "," + fmt(l) + "\n";
            std::printf("lebesgue N=%zu: %.6g\n", n, l);
        }
        write_text(opts.out / "lebesgue.csv", csv);
    } else if (kind == "collocation") {
        const auto problem = build_problem(cfg, "");
        const TensorGrid grid = build_grid(cfg, *problem);
        const auto deriv = build_deriv(cfg, *problem, grid);
        if (grid.size() > 4000) throw ConfigError("probe collocation: grid too large for a dense eigen-solve (> 4000 nodes)");
        const bool dirichlet = cfg.get_bool("probe", "dirichlet", false);
        const auto sys = as_config_error([&] { return collocation_matrix(*problem, grid, deriv, dirichlet); });
        const double k = kappa_sq(sys.a);
        TheoryProbe p;
        p.kind = "collocation";
        p.n = grid.size();
        p.kappa_sq = k;
        rep.probes.push_back(p);
        rep.metrics["kappa_sq"] = k;
        rep.config["resolved"] = {{"problem", problem->name()}, {"grid", grid_json(grid, deriv)}, {"dirichlet", dirichlet}};
        std::printf("collocation %s (%zu nodes): kappa_sq %.6g\n", problem->name().c_str(), grid.size(), k);
    } else if (kind == "eps_op") {
        auto ns = cfg.get_size_list("probe", "n");
        if (ns.empty()) ns = {32, 64, 128, 256};
        const Basis basis = as_config_error([&] { return parse_basis(cfg.get_string("probe", "basis", "fourier")); });
        const std::size_t order = cfg.get_size("probe", "order", 1);
        EpsOpConfig ec;
        ec.trials = cfg.get_size("probe", "trials", ec.trials);
        ec.dense = cfg.get_size("probe", "dense", ec.dense);
        ec.decay = cfg.get_double("probe", "decay", ec.decay);
        ec.seed = seed;
        std::string csv = "n,eps_op\n";
        std::vector<double> lx, ly;
        for (auto n : ns) {
            const Grid1D g = as_config_error([&] { return Grid1D(basis, n, basis == Basis::Fourier ? Interval{0, 2 * std::numbers::pi} : Interval{-1, 1}); });
            const auto sur = as_config_error([&] { return parse_diff_operator(cfg.get_string("probe", "stencil", "fd:1"), g); });
            const auto ref = as_config_error([&] { return parse_diff_operator(cfg.get_string("probe", "reference", "spectral"), g); });
            const double e = as_config_error([&] { return epsilon_op(g, order, ref, sur, ec); });
            TheoryProbe p;
            p.kind = "eps_op";
            p.n = n;
            p.eps_op = e;
            rep.probes.push_back(p);
            csv += std::to_string(n) + "," + fmt(e) + "\n";
            if (e > 0) {
                lx.push_back(std::log(static_cast<double>(n)));
                ly.push_back(std::log(e));
            }
            std::printf("eps_op N=%zu: %.6g\n", n, e);
        }
        if (lx.size() >= 2) {
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                mx += lx[i];
                my += ly[i];
            }
            mx /= static_cast<double>(lx.size());
            my /= static_cast<double>(lx.size());
            double sxy = 0, sxx = 0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                sxy += (lx[i] - mx) * (ly[i] - my);
                sxx += (lx[i] - mx) * (lx[i] - mx);
            }
            rep.metrics["decay_exponent"] = -sxy / sxx;
            std::printf("fitted decay exponent %.4f\n", -sxy / sxx);
        }
        write_text(opts.out / "eps_op.csv", csv);
    } else {
        throw ConfigError("probe: kind must be gram, lebesgue, collocation or eps_op");
    }
    rep.config["subcommand"] = "probe";
    rep.config["ini"] = cfg.to_json();
    rep.runtime["seconds"] = seconds_since(t0);
    write_report(rep, opts.out);
}

void run_decompose(Config cfg, const GlobalOptions& opts) {
    cfg.check_sections({"run", "params", "grid", "decompose"});
    cfg.check_keys("run", {"problem", "seed", "max_steps"});
    cfg.check_keys("grid", {"n", "basis"});
    cfg.check_keys("decompose", {"stencils", "steps", "rank", "cg_iters", "damping", "early", "log_every",
                                 "test_points", "lambda_ibc"});
    const auto seed = resolve_seed(cfg, opts);
    const auto max_steps = resolve_max_steps(cfg, opts);
    const auto problem = build_problem(cfg, "convection");
    const TensorGrid grid = build_grid(cfg, *problem);

    DecompositionConfig dc;
    auto names = cfg.get_list("decompose", "stencils");
    if (names.empty()) names = {"fd:1", "fd:2", "spectral"};
    for (const auto& s : names) dc.time_stencils.push_back(as_config_error([&] { return parse_diff_operator(s, grid.axis(0)); }));
    dc.steps = cfg.get_size("decompose", "steps", 200);
    if (max_steps) dc.steps = std::min(dc.steps, *max_steps);
    dc.nncg.rank = cfg.get_size("decompose", "rank", 1000);
    dc.nncg.cg_iters = cfg.get_size("decompose", "cg_iters", 100);
    dc.nncg.damping = cfg.get_double("decompose", "damping", -1.0);
    dc.nncg.seed = seed;
    dc.grid = grid;
    dc.lambda_ibc = cfg.get_double("decompose", "lambda_ibc");
    dc.early = cfg.get_size("decompose", "early", dc.early);
    dc.log_every = cfg.get_size("decompose", "log_every", dc.log_every);
    dc.test_per_axis = cfg.get_size("decompose", "test_points", dc.test_per_axis);
    dc.jobs = std::max(1, opts.jobs);

    const auto t0 = Clock::now();
    auto res = as_config_error([&] { return decomposition_experiment(*problem, dc); });
    res.report.config["ini"] = cfg.to_json();
    res.report.runtime["seconds"] = seconds_since(t0);
    write_report(res.report, opts.out);
    std::string csv = "stencil,plateau,slope,kappa_sq,final_loss\n";
    std::printf("%-10s %-14s %-14s %-14s %-14s\n", "stencil", "plateau", "slope", "kappa_sq", "final_loss");
    for (const auto& r : res.rows) {
        csv += r.stencil + "," + fmt(r.plateau) + "," + fmt(r.slope) + "," + fmt(r.kappa_sq) + "," + fmt(r.final_loss) + "\n";
        std::printf("%-10s %-14.6e %-14.6e %-14.6e %-14.6e\n", r.stencil.c_str(), r.plateau, r.slope, r.kappa_sq, r.final_loss);
    }
    write_text(opts.out / "decomposition.csv", csv);
}

void list_problems(std::ostream& out) {
    for (const auto& name : problem_names()) {
        const auto p = make_problem(name);
        const TensorGrid g = p->default_grid();
        const auto d = p->default_deriv(g);
        const auto axes = p->axis_names();
        const auto s = p->default_solver();
        char buf[160];
        std::string line = name;
        line.resize(12, ' ');
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const auto& ax = g.axis(a);
            std::snprintf(buf, sizeof buf, "N_%s=%zu %s[%g,%g] deriv_%s=%s  ", axes[a].c_str(), ax.n(),
                          to_string(ax.basis()).c_str(), ax.interval().a, ax.interval().b, axes[a].c_str(),
                          to_string(d[a]).c_str());
            line += buf;
        }
        std::snprintf(buf, sizeof buf, "lambda_ibc=%g  %s steps=%zu rank=%zu cg_iters=%zu", p->default_lambda_ibc(),
                      s.optimizer.c_str(), s.steps, s.rank, s.cg_iters);
        line += buf;
        for (const auto& [k, v] : p->parameters()) {
            std::snprintf(buf, sizeof buf, "  %s=%g", k.c_str(), v);
            line += buf;
        }
        out << line << '\n';
    }
}

}  // namespace bwler::cli
