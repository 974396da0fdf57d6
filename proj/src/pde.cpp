#include "bwler/pde.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bwler {
namespace {

constexpr double kPi = std::numbers::pi;

// Flat indices of the nodes whose coordinate on `axis` is the interval end
// (`at_end`) or start.
std::vector<std::size_t> face(const TensorGrid& grid, std::size_t axis, bool at_end) {
    const Grid1D& ax = grid.axis(axis);
    const double target = at_end ? ax.interval().b : ax.interval().a;
    std::size_t k = ax.size();
    for (std::size_t j = 0; j < ax.size(); ++j)
        if (ax.nodes()[j] == target) k = j;
    if (k == ax.size()) throw std::invalid_argument("grid has no node on the requested face");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.multi_index(i)[axis] == k) out.push_back(i);
    return out;
}

std::shared_ptr<const PointSet> face_points(const TensorGrid& grid, std::size_t axis, bool at_end) {
    return std::make_shared<const PointSet>(PointSet::nodes(grid, face(grid, axis, at_end)));
}

template <typename F>
Vec targets(const PointSet& ps, F f) {
    Vec v(static_cast<Eigen::Index>(ps.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto row = ps.coordinates().row(static_cast<Eigen::Index>(i));
        v(static_cast<Eigen::Index>(i)) = f(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
    return v;
}

IbcGroup value_group(const BwlerModel& m, std::string name, std::shared_ptr<const PointSet> ps, Vec target,
                     std::vector<std::size_t> orders) {
    std::vector<std::pair<double, FieldOperator>> terms;
    terms.emplace_back(1.0, FieldOperator(m, std::move(orders), ps));
    return {std::move(name), std::make_shared<LinearBlock>(std::move(terms), std::move(target))};
}

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void check_params(const std::string& problem, const std::map<std::string, double>& p,
                  std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw std::invalid_argument("unknown parameter '" + k + "' for problem " + problem);
        if (!std::isfinite(v)) throw std::invalid_argument("parameter '" + k + "' must be finite");
    }
}

std::shared_ptr<LinearBlock> linear_pde_block(const BwlerModel& m, const LinearOperatorSpec& spec,
                                              std::shared_ptr<const PointSet> pts) {
    std::vector<std::pair<double, FieldOperator>> terms;
    for (const auto& t : spec.terms) terms.emplace_back(t.coeff, FieldOperator(m, t.orders, pts));
    return std::make_shared<LinearBlock>(std::move(terms), Vec::Zero(static_cast<Eigen::Index>(pts->size())));
}

class Convection : public PdeProblem {
public:
    explicit Convection(double c) : c_(c) {}
    std::string name() const override { return "convection"; }
    std::vector<std::string> axis_names() const override { return {"t", "x"}; }
    std::vector<Interval> domain() const override { return {{0.0, 1.0}, {0.0, 2 * kPi}}; }
    TensorGrid default_grid() const override {
        return TensorGrid({Grid1D::chebyshev(81, {0.0, 1.0}), Grid1D::fourier(80, {0.0, 2 * kPi})});
    }
    double default_lambda_ibc() const override { return 1.0; }
    SolverDefaults default_solver() const override { return {"nncg", 350, 1000, 100}; }
    std::map<std::string, double> parameters() const override { return {{"c", c_}}; }
    bool is_linear() const override { return true; }
    std::optional<LinearOperatorSpec> linear_operator() const override {
        return LinearOperatorSpec{{{1.0, {1, 0}}, {c_, {0, 1}}}};
    }
    bool has_exact() const override { return true; }
    double exact(std::span<const double> p) const override { return std::sin(p[1] - c_ * p[0]); }

    std::shared_ptr<ResidualBlock> pde_block(const BwlerModel& m, std::shared_ptr<const PointSet> pts) const override {
        return linear_pde_block(m, *linear_operator(), std::move(pts));
    }
    std::vector<IbcGroup> ibc_groups(const BwlerModel& m) const override {
        std::vector<IbcGroup> out;
        auto ic = face_points(m.grid(), 0, false);
        out.push_back(value_group(m, "initial", ic, targets(*ic, [](auto x) { return std::sin(x[1]); }), {0, 0}));
        if (m.grid().axis(1).basis() == Basis::Chebyshev) out.push_back(periodic_group(m));
        return out;
    }

    static IbcGroup periodic_group(const BwlerModel& m) {
        auto lo = face_points(m.grid(), 1, false);
        auto hi = face_points(m.grid(), 1, true);
        std::vector<std::pair<double, FieldOperator>> terms;
        terms.emplace_back(1.0, FieldOperator(m, {0, 0}, lo));
        terms.emplace_back(-1.0, FieldOperator(m, {0, 0}, hi));
        return {"periodic", std::make_shared<LinearBlock>(std::move(terms), Vec::Zero(static_cast<Eigen::Index>(lo->size())))};
    }

private:
    double c_;
};

double gaussian_ic(double x) {
    const double s = kPi / 4;
    return std::exp(-(x - kPi) * (x - kPi) / (2 * s * s));
}

class Reaction : public PdeProblem {
public:
    explicit Reaction(double rho) : rho_(rho) {}
    std::string name() const override { return "reaction"; }
    std::vector<std::string> axis_names() const override { return {"t", "x"}; }
    std::vector<Interval> domain() const override { return {{0.0, 1.0}, {0.0, 2 * kPi}}; }
    TensorGrid default_grid() const override {
        return TensorGrid({Grid1D::chebyshev(81, {0.0, 1.0}), Grid1D::chebyshev(81, {0.0, 2 * kPi})});
    }
    double default_lambda_ibc() const override { return 1.0; }
    SolverDefaults default_solver() const override { return {"nncg", 250000, 16, 16}; }
    std::map<std::string, double> parameters() const override { return {{"rho", rho_}}; }
    bool is_linear() const override { return false; }
    bool has_exact() const override { return true; }
    double exact(std::span<const double> p) const override {
        const double h = gaussian_ic(p[1]);
        const double e = std::exp(rho_ * p[0]);
        return h * e / (h * e + 1.0 - h);
    }

    std::shared_ptr<ResidualBlock> pde_block(const BwlerModel& m, std::shared_ptr<const PointSet> pts) const override {
        return std::make_shared<ReactionBlock>(FieldOperator(m, {1, 0}, pts), FieldOperator(m, {0, 0}, pts), rho_);
    }
    std::vector<IbcGroup> ibc_groups(const BwlerModel& m) const override {
        std::vector<IbcGroup> out;
        auto ic = face_points(m.grid(), 0, false);
        out.push_back(value_group(m, "initial", ic, targets(*ic, [](auto x) { return gaussian_ic(x[1]); }), {0, 0}));
        if (m.grid().axis(1).basis() == Basis::Chebyshev) out.push_back(Convection::periodic_group(m));
        return out;
    }

private:
    double rho_;
};

class Wave : public PdeProblem {
public:
    explicit Wave(double beta) : beta_(beta) {}
    std::string name() const override { return "wave"; }
    std::vector<std::string> axis_names() const override { return {"t", "x"}; }
    std::vector<Interval> domain() const override { return {{0.0, 1.0}, {0.0, 1.0}}; }
    TensorGrid default_grid() const override {
        return TensorGrid({Grid1D::chebyshev(41, {0.0, 1.0}), Grid1D::chebyshev(41, {0.0, 1.0})});
    }
    double default_lambda_ibc() const override { return 100.0; }
    SolverDefaults default_solver() const override { return {"nncg", 200, 1000, 1000}; }
    std::map<std::string, double> parameters() const override { return {{"beta", beta_}}; }
    bool is_linear() const override { return true; }
    std::optional<LinearOperatorSpec> linear_operator() const override {
        return LinearOperatorSpec{{{1.0, {2, 0}}, {-4.0, {0, 2}}}};
    }
    bool has_exact() const override { return true; }
    double exact(std::span<const double> p) const override {
        const double t = p[0], x = p[1];
        return std::sin(kPi * x) * std::cos(2 * kPi * t) + 0.5 * std::sin(beta_ * kPi * x) * std::cos(2 * beta_ * kPi * t);
    }

    std::shared_ptr<ResidualBlock> pde_block(const BwlerModel& m, std::shared_ptr<const PointSet> pts) const override {
        return linear_pde_block(m, *linear_operator(), std::move(pts));
    }
    std::vector<IbcGroup> ibc_groups(const BwlerModel& m) const override {
        std::vector<IbcGroup> out;
        auto ic = face_points(m.grid(), 0, false);
        const double b = beta_;
        out.push_back(value_group(m, "initial", ic,
                                  targets(*ic, [b](auto x) { return std::sin(kPi * x[1]) + 0.5 * std::sin(b * kPi * x[1]); }),
                                  {0, 0}));
        out.push_back(value_group(m, "velocity", ic, Vec::Zero(static_cast<Eigen::Index>(ic->size())), {1, 0}));
        for (bool end : {false, true}) {
            auto wall = face_points(m.grid(), 1, end);
            out.push_back(value_group(m, end ? "boundary_right" : "boundary_left", wall,
                                      Vec::Zero(static_cast<Eigen::Index>(wall->size())), {0, 0}));
        }
        return out;
    }

private:
    double beta_;
};

class Burgers : public PdeProblem {
public:
    explicit Burgers(double nu) : nu_(nu) {}
    std::string name() const override { return "burgers"; }
    std::vector<std::string> axis_names() const override { return {"t", "x"}; }
    std::vector<Interval> domain() const override { return {{0.0, 1.0}, {-1.0, 1.0}}; }
    TensorGrid default_grid() const override {
        return TensorGrid({Grid1D::chebyshev(321, {0.0, 1.0}), Grid1D::chebyshev(321, {-1.0, 1.0})});
    }
    std::vector<DiffOperator> default_deriv(const TensorGrid& grid) const override {
        return {DiffOperator::finite_difference(1), DiffOperator::spectral_for(grid.axis(1))};
    }
    double default_lambda_ibc() const override { return 10.0; }
    SolverDefaults default_solver() const override { return {"nncg", 850, 1000, 2000}; }
    std::map<std::string, double> parameters() const override { return {{"nu", nu_}}; }
    bool is_linear() const override { return false; }

    std::shared_ptr<ResidualBlock> pde_block(const BwlerModel& m, std::shared_ptr<const PointSet> pts) const override {
        return std::make_shared<BurgersBlock>(FieldOperator(m, {1, 0}, pts), FieldOperator(m, {0, 0}, pts),
                                              FieldOperator(m, {0, 1}, pts), FieldOperator(m, {0, 2}, pts), nu_);
    }
    std::vector<IbcGroup> ibc_groups(const BwlerModel& m) const override {
        std::vector<IbcGroup> out;
        auto ic = face_points(m.grid(), 0, false);
        out.push_back(value_group(m, "initial", ic, targets(*ic, [](auto x) { return -std::sin(kPi * x[1]); }), {0, 0}));
        for (bool end : {false, true}) {
            auto wall = face_points(m.grid(), 1, end);
            out.push_back(value_group(m, end ? "boundary_right" : "boundary_left", wall,
                                      Vec::Zero(static_cast<Eigen::Index>(wall->size())), {0, 0}));
        }
        return out;
    }

private:
    double nu_;
};

class Poisson : public PdeProblem {
public:
    static constexpr double kHole = 0.3, kRadius = 0.1;
    static constexpr std::size_t kCirclePoints = 64, kSidePoints = 64;

    std::string name() const override { return "poisson"; }
    std::vector<std::string> axis_names() const override { return {"x", "y"}; }
    std::vector<Interval> domain() const override { return {{-0.5, 0.5}, {-0.5, 0.5}}; }
    TensorGrid default_grid() const override {
        return TensorGrid({Grid1D::chebyshev(51, {-0.5, 0.5}), Grid1D::chebyshev(51, {-0.5, 0.5})});
    }
    double default_lambda_ibc() const override { return 100.0; }
    SolverDefaults default_solver() const override { return {"nncg", 51000, 1000, 64}; }
    bool is_linear() const override { return true; }
    std::optional<LinearOperatorSpec> linear_operator() const override {
        return LinearOperatorSpec{{{-1.0, {2, 0}}, {-1.0, {0, 2}}}};
    }
    bool in_domain(std::span<const double> p) const override {
        for (double sx : {1.0, -1.0})
            for (double sy : {1.0, -1.0}) {
                const double dx = p[0] - sx * kHole, dy = p[1] - sy * kHole;
                if (dx * dx + dy * dy <= kRadius * kRadius) return false;
            }
        return true;
    }

    std::shared_ptr<ResidualBlock> pde_block(const BwlerModel& m, std::shared_ptr<const PointSet> pts) const override {
        return linear_pde_block(m, *linear_operator(), std::move(pts));
    }
    std::vector<IbcGroup> ibc_groups(const BwlerModel& m) const override {
        RowMat circles(static_cast<Eigen::Index>(4 * kCirclePoints), 2);
        Eigen::Index r = 0;
        for (double sx : {1.0, -1.0})
            for (double sy : {1.0, -1.0})
                for (std::size_t k = 0; k < kCirclePoints; ++k, ++r) {
                    const double a = 2 * kPi * static_cast<double>(k) / static_cast<double>(kCirclePoints);
                    circles(r, 0) = sx * kHole + kRadius * std::cos(a);
                    circles(r, 1) = sy * kHole + kRadius * std::sin(a);
                }
        RowMat square(static_cast<Eigen::Index>(4 * kSidePoints), 2);
        r = 0;
        // counter-clockwise from each corner, corners counted once
        const double corners[4][2] = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
        for (int s = 0; s < 4; ++s) {
            const auto* c0 = corners[s];
            const auto* c1 = corners[(s + 1) % 4];
            for (std::size_t k = 0; k < kSidePoints; ++k, ++r) {
                const double f = static_cast<double>(k) / static_cast<double>(kSidePoints);
                square(r, 0) = c0[0] + f * (c1[0] - c0[0]);
                square(r, 1) = c0[1] + f * (c1[1] - c0[1]);
            }
        }
        auto hole_ps = std::make_shared<const PointSet>(PointSet::scattered(m.grid(), circles));
        auto outer_ps = std::make_shared<const PointSet>(PointSet::scattered(m.grid(), square));
        std::vector<IbcGroup> out;
        out.push_back(value_group(m, "holes", hole_ps, Vec::Zero(circles.rows()), {0, 0}));
        out.push_back(value_group(m, "outer", outer_ps, Vec::Ones(square.rows()), {0, 0}));
        return out;
    }
};

std::mt19937_64 make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x62776cu};
    return std::mt19937_64(seq);
}

}  // namespace

std::vector<DiffOperator> PdeProblem::default_deriv(const TensorGrid& grid) const {
    std::vector<DiffOperator> out;
    for (const auto& ax : grid.axes()) out.push_back(DiffOperator::spectral_for(ax));
    return out;
}

double PdeProblem::exact(std::span<const double>) const {
    throw std::runtime_error("problem '" + name() + "' has no analytic solution; supply reference data");
}

std::vector<std::string> problem_names() { return {"convection", "reaction", "wave", "burgers", "poisson"}; }

std::unique_ptr<PdeProblem> make_problem(const std::string& name, const std::map<std::string, double>& params) {
    if (name == "convection") {
        check_params(name, params, {"c"});
        return std::make_unique<Convection>(param(params, "c", 40.0));
    }
    if (name == "reaction") {
        check_params(name, params, {"rho"});
        return std::make_unique<Reaction>(param(params, "rho", 5.0));
    }
    if (name == "wave") {
        check_params(name, params, {"beta"});
        return std::make_unique<Wave>(param(params, "beta", 5.0));
    }
    if (name == "burgers") {
        check_params(name, params, {"nu"});
        const double nu = param(params, "nu", 0.01 / kPi);
        if (!(nu > 0)) throw std::invalid_argument("burgers: nu must be positive");
        return std::make_unique<Burgers>(nu);
    }
    if (name == "poisson") {
        check_params(name, params, {});
        return std::make_unique<Poisson>();
    }
    throw std::invalid_argument("unknown problem '" + name + "'");
}

std::string to_string(CollocationKind kind) {
    switch (kind) {
        case CollocationKind::Nodal: return "nodal";
        case CollocationKind::UniformRandom: return "uniform";
        case CollocationKind::ChebyshevWeighted: return "chebyshev";
        case CollocationKind::Equispaced: return "equispaced";
    }
    return "?";
}

CollocationKind parse_collocation_kind(const std::string& text) {
    for (auto k : {CollocationKind::Nodal, CollocationKind::UniformRandom, CollocationKind::ChebyshevWeighted,
                   CollocationKind::Equispaced})
        if (to_string(k) == text) return k;
    throw std::invalid_argument("unknown collocation scheme '" + text + "'");
}

RowMat sample_collocation(const CollocationScheme& scheme, const TensorGrid& grid, const PointMask& mask) {
    const std::size_t d = grid.dims();
    std::vector<std::vector<double>> rows;
    auto keep = [&](const std::vector<double>& p) { return !mask || mask(p); };

    switch (scheme.kind) {
        case CollocationKind::Nodal:
            for (std::size_t i = 0; i < grid.size(); ++i) {
                auto p = grid.node(i);
                if (keep(p)) rows.push_back(std::move(p));
            }
            break;
        case CollocationKind::Equispaced: {
            if (scheme.count < 1) throw std::invalid_argument("equispaced collocation needs count >= 1");
            const auto per = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(scheme.count), 1.0 / static_cast<double>(d))));
            if (per < 2) throw std::invalid_argument("equispaced collocation needs at least 2 points per axis");
            std::vector<std::size_t> idx(d, 0);
            std::size_t total = 1;
            for (std::size_t a = 0; a < d; ++a) total *= per;
            for (std::size_t f = 0; f < total; ++f) {
                std::size_t rem = f;
                std::vector<double> p(d);
                for (std::size_t a = d; a-- > 0;) {
                    const std::size_t k = rem % per;
                    rem /= per;
                    const Interval iv = grid.axis(a).interval();
                    p[a] = k + 1 == per ? iv.b : iv.a + iv.length() * static_cast<double>(k) / static_cast<double>(per - 1);
                }
                if (keep(p)) rows.push_back(std::move(p));
            }
            break;
        }
        case CollocationKind::UniformRandom:
        case CollocationKind::ChebyshevWeighted: {
            if (scheme.count < 1) throw std::invalid_argument("random collocation needs count >= 1");
            auto rng = make_rng(scheme.seed);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::size_t attempts = 0;
            while (rows.size() < scheme.count) {
                if (++attempts > 1000 * scheme.count) throw std::runtime_error("collocation mask rejects nearly every point");
                std::vector<double> p(d);
                for (std::size_t a = 0; a < d; ++a) {
                    const Interval iv = grid.axis(a).interval();
                    double c;
                    if (scheme.kind == CollocationKind::ChebyshevWeighted && grid.axis(a).basis() == Basis::Chebyshev)
                        c = 0.5 * (1.0 - std::cos(std::numbers::pi * unit(rng)));
                    else
                        c = unit(rng);
                    p[a] = iv.a + c * iv.length();
                }
                if (keep(p)) rows.push_back(std::move(p));
            }
            break;
        }
    }
    if (rows.empty()) throw std::invalid_argument("collocation produced no points");
    RowMat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t a = 0; a < d; ++a) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = rows[i][a];
    return out;
}

std::shared_ptr<const PointSet> collocation_points(const PdeProblem& problem, const TensorGrid& grid,
                                                   const CollocationScheme& scheme) {
    if (scheme.kind == CollocationKind::Nodal) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (problem.in_domain(grid.node(i))) idx.push_back(i);
        if (idx.empty()) throw std::invalid_argument("no grid node lies inside the domain");
        return std::make_shared<const PointSet>(PointSet::nodes(grid, std::move(idx)));
    }
    const auto mask = [&problem](std::span<const double> p) { return problem.in_domain(p); };
    return std::make_shared<const PointSet>(PointSet::scattered(grid, sample_collocation(scheme, grid, mask)));
}

Vec residual(const PdeProblem& problem, const BwlerModel& model, const RowMat& points) {
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        if (!problem.in_domain(std::span<const double>(points.row(i).data(), static_cast<std::size_t>(points.cols()))))
            throw DomainError("residual requested at a point outside the domain");
    auto block = problem.pde_block(model, std::make_shared<const PointSet>(PointSet::scattered(model.grid(), points)));
    return block->residual(model.theta());
}

Vec ibc_residual(const PdeProblem& problem, const BwlerModel& model) {
    std::vector<Vec> parts;
    Eigen::Index n = 0;
    for (const auto& g : problem.ibc_groups(model)) {
        parts.push_back(g.block->residual(model.theta()));
        n += parts.back().size();
    }
    Vec out(n);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.segment(at, p.size()) = p;
        at += p.size();
    }
    return out;
}

LeastSquaresObjective build_objective(const PdeProblem& problem, const BwlerModel& model, double lambda_ibc,
                                      std::shared_ptr<const PointSet> collocation) {
    if (!(lambda_ibc > 0.0)) throw std::invalid_argument("lambda_ibc must be positive");
    if (!collocation || collocation->size() == 0) throw std::invalid_argument("empty collocation set");
    LeastSquaresObjective obj(model.grid().size());
    obj.add("pde", 1.0 / static_cast<double>(collocation->size()), problem.pde_block(model, collocation));
    const auto groups = problem.ibc_groups(model);
    std::size_t total = 0;
    for (const auto& g : groups) total += g.block->rows();
    for (const auto& g : groups) obj.add("ibc", lambda_ibc / static_cast<double>(total), g.block);
    return obj;
}

LossValue loss(const PdeProblem& problem, const BwlerModel& model, double lambda_ibc, const CollocationScheme& scheme) {
    auto obj = build_objective(problem, model, lambda_ibc, collocation_points(problem, model.grid(), scheme));
    LossValue out;
    out.value = obj.value_and_gradient(model.theta(), out.gradient);
    return out;
}

Vec exact_solution(const PdeProblem& problem, const RowMat& points) {
    Vec out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        out(i) = problem.exact(std::span<const double>(points.row(i).data(), static_cast<std::size_t>(points.cols())));
    return out;
}

ReferenceData load_reference(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read reference file " + path.string());
    ReferenceData ref;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("reference file is empty");
    {
        std::istringstream hs(line);
        std::string col;
        while (hs >> col) ref.columns.push_back(col);
    }
    if (ref.columns.size() < 2) throw std::runtime_error("reference header needs coordinates and a value column");
    const std::size_t width = ref.columns.size();
    std::vector<double> flat;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double v;
        std::size_t k = 0;
        while (ls >> v) {
            flat.push_back(v);
            ++k;
        }
        if (k != width) throw std::runtime_error("reference row " + std::to_string(rows + 1) + " has the wrong column count");
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("reference file has no data rows");
    ref.points.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width - 1));
    ref.values.resize(static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c + 1 < width; ++c)
            ref.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = flat[i * width + c];
        ref.values(static_cast<Eigen::Index>(i)) = flat[i * width + width - 1];
    }
    return ref;
}

void save_reference(const ReferenceData& data, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write reference file " + path.string());
    for (std::size_t c = 0; c < data.columns.size(); ++c) os << (c ? " " : "") << data.columns[c];
    os << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
        for (Eigen::Index c = 0; c < data.points.cols(); ++c) os << data.points(i, c) << ' ';
        os << data.values(i) << '\n';
    }
}

RowMat test_points(const PdeProblem& problem, std::size_t per_axis) {
    std::vector<Grid1D> axes;
    for (const auto& iv : problem.domain()) axes.push_back(Grid1D::chebyshev(1, iv));
    CollocationScheme s{CollocationKind::Equispaced, 1, 0};
    s.count = 1;
    for (std::size_t a = 0; a < axes.size(); ++a) s.count *= per_axis;
    return sample_collocation(s, TensorGrid(axes), [&problem](std::span<const double> p) { return problem.in_domain(p); });
}

LeastSquaresObjective interpolation_objective(const BwlerModel& model, const RowMat& points, const Vec& targets) {
    if (points.rows() != targets.size()) throw std::invalid_argument("interpolation: point/target count mismatch");
    if (points.rows() == 0) throw std::invalid_argument("interpolation: no samples");
    auto ps = std::make_shared<const PointSet>(PointSet::scattered(model.grid(), points));
    std::vector<std::pair<double, FieldOperator>> terms;
    terms.emplace_back(1.0, FieldOperator(model, std::vector<std::size_t>(model.grid().dims(), 0), ps));
    LeastSquaresObjective obj(model.grid().size());
    obj.add("data", 1.0 / static_cast<double>(points.rows()), std::make_shared<LinearBlock>(std::move(terms), targets));
    return obj;
}

}  // namespace bwler
