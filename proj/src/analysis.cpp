#include "bwler/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bwler/interp.hpp"

namespace bwler {
namespace {

using json = nlohmann::ordered_json;

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double to_num(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw std::invalid_argument("report: bad number '" + s + "'");
}

json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }
std::optional<double> from_opt(const json& j) {
    if (j.is_null()) return std::nullopt;
    return to_num(j);
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat axis_power(const Grid1D& g, const DiffOperator& op, std::size_t order) {
    if (order == 0) return Mat::Identity(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
    return physical_derivative(g, op, order).to_dense();
}

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
std::pair<Vec, Vec> gauss_legendre(std::size_t q) {
    const auto n = static_cast<Eigen::Index>(q);
    Mat j = Mat::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        j(k, k - 1) = j(k - 1, k) = kk / std::sqrt(4 * kk * kk - 1);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(j);
    const Vec w = 2.0 * es.eigenvectors().row(0).transpose().cwiseAbs2();
    return {es.eigenvalues(), w};
}

// Values of one random series at canonical points; modes as described in epsilon_op.
struct Series {
    Basis basis;
    std::vector<double> a, b;

    double operator()(double s) const {
        double v = 0;
        if (basis == Basis::Chebyshev) {
            const double th = std::acos(std::clamp(s, -1.0, 1.0));
            for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::cos(static_cast<double>(k) * th);
        } else {
            for (std::size_t k = 0; k < a.size(); ++k)
                v += a[k] * std::cos(static_cast<double>(k) * s) + b[k] * std::sin(static_cast<double>(k) * s);
        }
        return v;
    }
};

}  // namespace

double l2re(const Vec& pred, const Vec& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("l2re: length mismatch");
    const double t = truth.norm();
    if (!(t > 0.0)) throw std::invalid_argument("l2re: truth has zero norm");
    return (pred - truth).norm() / t;
}

Mat interpolation_matrix(const Grid1D& grid, std::span<const double> samples) { return evaluation_matrix(grid, samples); }

double condition_number_sym(const Mat& s) {
    if (s.rows() == 0 || s.rows() != s.cols()) throw std::invalid_argument("condition_number_sym: need a square matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(hi > 0.0) || lo <= 1e-15 * hi) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

double kappa_sq(const Mat& a) { return condition_number_sym(a.transpose() * a); }

GramMatrices gram_matrices(const Mat& l, std::size_t n) {
    if (l.rows() == 0 || l.cols() == 0) throw std::invalid_argument("gram_matrices: empty interpolation matrix");
    if (static_cast<std::size_t>(l.cols()) != n + 1) throw std::invalid_argument("gram_matrices: expected N+1 columns");
    GramMatrices g;
    g.g_emp = l.transpose() * l / static_cast<double>(l.rows());
    g.g_pop = to_vec(clenshaw_curtis_weights(n)) / 2.0;
    g.kappa_sq_emp = condition_number_sym(g.g_emp);
    g.kappa_sq_pop = g.g_pop.maxCoeff() / g.g_pop.minCoeff();
    return g;
}

Mat population_gram_exact(std::size_t n) {
    const auto [x, w] = gauss_legendre(n + 1);
    const Grid1D grid = Grid1D::chebyshev(n);
    const Mat e = evaluation_matrix(grid, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    return e.transpose() * (0.5 * w).asDiagonal() * e;
}

double median_gram_kappa(std::size_t n, std::size_t m, std::size_t seeds, CollocationKind kind) {
    const TensorGrid grid({Grid1D::chebyshev(n)});
    std::vector<double> ks;
    for (std::size_t s = 0; s < seeds; ++s) {
        const RowMat pts = sample_collocation({kind, m, s}, grid);
        const Mat l = interpolation_matrix(grid.axis(0), std::span<const double>(pts.data(), static_cast<std::size_t>(pts.rows())));
        ks.push_back(gram_matrices(l, n).kappa_sq_emp);
    }
    std::sort(ks.begin(), ks.end());
    const std::size_t h = ks.size() / 2;
    return ks.size() % 2 ? ks[h] : 0.5 * (ks[h - 1] + ks[h]);
}

double lebesgue_constant(const Grid1D& grid, std::size_t resolution) {
    if (resolution < 10 * grid.size()) throw std::invalid_argument("lebesgue_constant: resolution must be >= 10 (N+1)");
    const auto& iv = grid.interval();
    std::vector<double> xs(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
        xs[i] = iv.a + iv.length() * static_cast<double>(i) / static_cast<double>(resolution - 1);
    const Mat e = evaluation_matrix(grid, xs);
    return e.cwiseAbs().rowwise().sum().maxCoeff();
}

CollocationSystem collocation_matrix(const LinearOperatorSpec& op, const TensorGrid& grid,
                                     const std::vector<DiffOperator>& surrogate, bool dirichlet) {
    if (surrogate.size() != grid.dims()) throw std::invalid_argument("collocation_matrix: one surrogate per axis");
    if (op.terms.empty()) throw std::invalid_argument("collocation_matrix: empty operator");
    const auto p = static_cast<Eigen::Index>(grid.size());
    CollocationSystem sys{Mat::Zero(p, p), Vec::Zero(p)};
    for (const auto& t : op.terms) {
        if (t.orders.size() != grid.dims()) throw std::invalid_argument("collocation_matrix: order/axis mismatch");
        Mat m = axis_power(grid.axis(0), surrogate[0], t.orders[0]);
        for (std::size_t a = 1; a < grid.dims(); ++a) m = kron(m, axis_power(grid.axis(a), surrogate[a], t.orders[a]));
        sys.a += t.coeff * m;
    }
    if (dirichlet) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const auto idx = grid.multi_index(static_cast<std::size_t>(i));
            bool boundary = false;
            for (std::size_t a = 0; a < grid.dims(); ++a)
                boundary = boundary || (grid.axis(a).basis() == Basis::Chebyshev && (idx[a] == 0 || idx[a] == grid.axis(a).n()));
            if (boundary) {
                sys.a.row(i).setZero();
                sys.a(i, i) = 1.0;
            }
        }
    }
    return sys;
}

CollocationSystem collocation_matrix(const PdeProblem& problem, const TensorGrid& grid,
                                     const std::vector<DiffOperator>& surrogate, bool dirichlet) {
    const auto op = problem.linear_operator();
    if (!problem.is_linear() || !op) throw std::invalid_argument("collocation_matrix: " + problem.name() + " is not linear");
    return collocation_matrix(*op, grid, surrogate, dirichlet);
}

double epsilon_op(const Grid1D& grid, std::size_t order, const DiffOperator& true_op, const DiffOperator& surrogate,
                  const EpsOpConfig& cfg) {
    if (cfg.trials == 0 || cfg.dense < 2) throw std::invalid_argument("epsilon_op: need trials >= 1 and dense >= 2");
    const Mat delta = axis_power(grid, true_op, order) - axis_power(grid, surrogate, order);
    const auto nodes = grid.canonical_nodes();
    const bool cheb = grid.basis() == Basis::Chebyshev;
    const std::size_t modes = cheb ? grid.n() + 1 : (grid.n() + 1) / 2;  // Fourier: no Nyquist mode
    std::vector<double> dense(cfg.dense);
    for (std::size_t i = 0; i < cfg.dense; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(cfg.dense - (cheb ? 1 : 0));
        dense[i] = cheb ? -1.0 + 2.0 * f : 2.0 * std::numbers::pi * f;
    }
    std::normal_distribution<double> g;
    double worst = 0.0;
    Vec v(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        // one stream per trial: the leading coefficients agree across N
        std::seed_seq sq{cfg.seed, static_cast<std::uint64_t>(t)};
        std::mt19937_64 rng(sq);
        g.reset();
        Series s{grid.basis(), std::vector<double>(modes), std::vector<double>(modes, 0.0)};
        for (std::size_t k = 0; k < modes; ++k) {
            const double scale = std::pow(cfg.decay, -static_cast<double>(k));
            s.a[k] = scale * g(rng);
            if (!cheb) s.b[k] = k == 0 ? 0.0 : scale * g(rng);
        }
        double sup = 0.0;
        for (double x : dense) sup = std::max(sup, std::abs(s(x)));
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            v(static_cast<Eigen::Index>(j)) = s(nodes[j]);
            sup = std::max(sup, std::abs(v(static_cast<Eigen::Index>(j))));
        }
        if (sup == 0.0) continue;
        worst = std::max(worst, (delta * (v / sup)).cwiseAbs().maxCoeff());
    }
    return worst;
}

double rho_fit(const std::vector<double>& ns, const std::vector<double>& errors, double floor) {
    if (ns.size() != errors.size()) throw std::invalid_argument("rho_fit: length mismatch");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(errors[i] > floor)) break;
        if (i > 0 && errors[i] >= errors[i - 1]) break;
        x.push_back(ns[i]);
        y.push_back(std::log(errors[i]));
    }
    if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::exp(-slope);
}

Trace make_trace(const std::string& name, const TrainState& state) {
    Trace t{name, {}};
    std::size_t li = 0;
    for (std::size_t k = 0; k < state.loss.size(); ++k) {
        TraceRow r{k, state.loss[k], std::nullopt};
        while (li < state.l2re.size() && state.l2re[li].iteration < k) ++li;
        if (li < state.l2re.size() && state.l2re[li].iteration == k) r.l2re = state.l2re[li].l2re;
        t.rows.push_back(r);
    }
    return t;
}

json to_json(const ExperimentReport& r) {
    json j;
    j["format"] = "bwler-report";
    j["version"] = 1;
    j["seed"] = r.seed;
    j["config"] = r.config;
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = num(v);
    j["metrics"] = metrics;
    json runtime = json::object();
    for (const auto& [k, v] : r.runtime) runtime[k] = num(v);
    j["runtime"] = runtime;
    json probes = json::array();
    for (const auto& p : r.probes)
        probes.push_back({{"kind", p.kind},       {"N", p.n},           {"M", p.m},
                          {"kappa_sq", opt(p.kappa_sq)}, {"lebesgue", opt(p.lebesgue)}, {"eps_op", opt(p.eps_op)},
                          {"rho_fit", opt(p.rho_fit)},   {"M_f", opt(p.m_f)},          {"M_u", opt(p.m_u)}});
    j["probes"] = probes;
    json traces = json::array();
    for (const auto& t : r.traces) {
        json it = json::array(), loss = json::array(), l2 = json::array();
        for (const auto& row : t.rows) {
            it.push_back(row.iteration);
            loss.push_back(num(row.loss));
            l2.push_back(opt(row.l2re));
        }
        traces.push_back({{"name", t.name}, {"iteration", it}, {"loss", loss}, {"l2re", l2}});
    }
    j["traces"] = traces;
    j["tables"] = r.tables;
    return j;
}

ExperimentReport report_from_json(const json& j) {
    if (j.value("format", "") != "bwler-report") throw std::invalid_argument("not a bwler report");
    if (j.at("version").get<int>() != 1) throw std::invalid_argument("unsupported report version");
    ExperimentReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = to_num(v);
    for (const auto& [k, v] : j.at("runtime").items()) r.runtime[k] = to_num(v);
    for (const auto& p : j.at("probes")) {
        TheoryProbe t;
        t.kind = p.at("kind").get<std::string>();
        t.n = p.at("N").get<std::size_t>();
        t.m = p.at("M").get<std::size_t>();
        t.kappa_sq = from_opt(p.at("kappa_sq"));
        t.lebesgue = from_opt(p.at("lebesgue"));
        t.eps_op = from_opt(p.at("eps_op"));
        t.rho_fit = from_opt(p.at("rho_fit"));
        t.m_f = from_opt(p.at("M_f"));
        t.m_u = from_opt(p.at("M_u"));
        r.probes.push_back(t);
    }
    for (const auto& t : j.at("traces")) {
        Trace tr{t.at("name").get<std::string>(), {}};
        const auto& it = t.at("iteration");
        const auto& loss = t.at("loss");
        const auto& l2 = t.at("l2re");
        if (it.size() != loss.size() || it.size() != l2.size()) throw std::invalid_argument("report: ragged trace");
        for (std::size_t i = 0; i < it.size(); ++i)
            tr.rows.push_back({it[i].get<std::size_t>(), to_num(loss[i]), from_opt(l2[i])});
        r.traces.push_back(std::move(tr));
    }
    r.tables = j.at("tables");
    return r;
}

std::string dump_report(const ExperimentReport& report) { return to_json(report).dump(2) + "\n"; }

ExperimentReport parse_report(const std::string& text) { return report_from_json(json::parse(text)); }

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "iteration,loss,l2re\n";
    char buf[96];
    for (const auto& r : trace.rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,", r.iteration, r.loss);
        out << buf;
        if (r.l2re) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.l2re);
            out << buf;
        }
        out << '\n';
    }
}

Trace read_trace_csv(const std::filesystem::path& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "iteration,loss,l2re") throw std::invalid_argument("trace csv: bad header");
    Trace t{name, {}};
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) throw std::invalid_argument("trace csv: bad row");
        TraceRow r{std::stoul(line.substr(0, c1)), std::stod(line.substr(c1 + 1, c2 - c1 - 1)), std::nullopt};
        if (c2 + 1 < line.size()) r.l2re = std::stod(line.substr(c2 + 1));
        t.rows.push_back(r);
    }
    return t;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
        out << dump_report(report);
    }
    if (report.traces.size() == 1) write_trace_csv(report.traces[0], dir / "trace.csv");
    else
        for (const auto& t : report.traces) {
            std::string safe = t.name;
            std::replace(safe.begin(), safe.end(), ':', '_');
            write_trace_csv(t, dir / ("trace_" + safe + ".csv"));
        }
}

DecompositionResult decomposition_experiment(const PdeProblem& problem, const DecompositionConfig& cfg) {
    if (cfg.time_stencils.empty()) throw std::invalid_argument("decomposition_experiment: no stencils");
    if (!problem.is_linear() || !problem.has_exact())
        throw std::invalid_argument("decomposition_experiment: needs a linear problem with an exact solution");
    const TensorGrid grid = cfg.grid ? *cfg.grid : problem.default_grid();
    const double lambda = cfg.lambda_ibc ? *cfg.lambda_ibc : problem.default_lambda_ibc();
    const RowMat tp = test_points(problem, cfg.test_per_axis);
    const Vec truth = exact_solution(problem, tp);
    const auto collocation = collocation_points(problem, grid, {});

    const std::size_t count = cfg.time_stencils.size();
    std::vector<DecompositionRow> rows(count);
    std::vector<Trace> traces(count);
    std::vector<double> seconds(count);
    std::vector<std::exception_ptr> errors(count);

#pragma omp parallel for num_threads(std::max(1, cfg.jobs)) schedule(dynamic)
    for (std::size_t s = 0; s < count; ++s) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const DiffOperator stencil = cfg.time_stencils[s];
            auto deriv = problem.default_deriv(grid);
            deriv[0] = stencil;
            BwlerModel model(grid, deriv);
            auto obj = build_objective(problem, model, lambda, collocation);
            TrainOptions opts;
            opts.log_every = cfg.log_every;
            opts.l2re = [&](const BwlerModel& m) { return l2re(to_vec(m.evaluate(tp)), truth); };
            TrainState st(model);
            run_nncg(obj, st, cfg.steps, cfg.nncg, opts);

            DecompositionRow& row = rows[s];
            row.stencil = to_string(stencil);
            row.plateau = st.l2re.back().l2re;
            row.final_loss = st.loss.back();
            const std::size_t e = std::min(cfg.early, st.loss.size() - 1);
            row.slope = e == 0 ? 0.0
                               : (std::log10(st.loss.front()) - std::log10(std::max(st.loss[e], 1e-300))) / static_cast<double>(e);
            // time-axis operator with the initial-condition row (t = a is the last CGL node)
            const Grid1D& taxis = grid.axis(0);
            Mat a = physical_derivative(taxis, stencil, 1).to_dense();
            const Eigen::Index init = taxis.basis() == Basis::Chebyshev ? a.rows() - 1 : 0;
            a.row(init).setZero();
            a(init, init) = 1.0;
            row.kappa_sq = kappa_sq(a);
            traces[s] = make_trace(row.stencil, st);
            seconds[s] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } catch (...) {
            errors[s] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    DecompositionResult out;
    out.rows = rows;
    auto& rep = out.report;
    rep.seed = cfg.nncg.seed;
    json stencils = json::array();
    for (const auto& s : cfg.time_stencils) stencils.push_back(to_string(s));
    json axes = json::array();
    for (const auto& ax : grid.axes())
        axes.push_back({{"basis", to_string(ax.basis())}, {"n", ax.n()}, {"interval", {ax.interval().a, ax.interval().b}}});
    rep.config = {{"subcommand", "decompose"},
                  {"problem", problem.name()},
                  {"stencils", stencils},
                  {"steps", cfg.steps},
                  {"rank", cfg.nncg.rank},
                  {"cg_iters", cfg.nncg.cg_iters},
                  {"lambda_ibc", lambda},
                  {"grid", axes}};
    json table = json::array();
    for (std::size_t s = 0; s < count; ++s) {
        const auto& r = rows[s];
        table.push_back({{"stencil", r.stencil},
                         {"plateau", num(r.plateau)},
                         {"slope", num(r.slope)},
                         {"kappa_sq", num(r.kappa_sq)},
                         {"final_loss", num(r.final_loss)}});
        rep.metrics["plateau." + r.stencil] = r.plateau;
        rep.metrics["slope." + r.stencil] = r.slope;
        rep.runtime["seconds." + r.stencil] = seconds[s];
        rep.traces.push_back(traces[s]);
    }
    rep.tables["decomposition"] = table;
    return out;
}

}  // namespace bwler
