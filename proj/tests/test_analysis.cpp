#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "bwler/analysis.hpp"

using namespace bwler;
using std::numbers::pi;

namespace {

std::vector<double> uniform(std::size_t m, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(m);
    for (auto& v : x) v = u(rng);
    return x;
}

// Cardinal function l_j(x) straight from the Lagrange product formula.
double lagrange(std::span<const double> nodes, std::size_t j, double x) {
    double v = 1.0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (k != j) v *= (x - nodes[k]) / (nodes[j] - nodes[k]);
    return v;
}

}  // namespace

TEST_CASE("l2re") {
    Vec t(4);
    t << 1, -2, 3, 0.5;
    CHECK(l2re(t, t) == 0.0);
    CHECK(l2re(2 * t, t) == doctest::Approx(1.0));
    Vec p = t;
    p(0) += t.norm();
    CHECK(l2re(p, t) == doctest::Approx(1.0));
    CHECK_THROWS_AS(l2re(t, Vec::Zero(4)), std::invalid_argument);
    CHECK_THROWS_AS(l2re(t, Vec::Ones(3)), std::invalid_argument);
}

TEST_CASE("interpolation matrix") {
    const Grid1D g = Grid1D::chebyshev(12);
    const auto nodes = g.nodes();
    const Mat id = interpolation_matrix(g, nodes);
    CHECK(id == Mat::Identity(13, 13));

    const auto xs = uniform(200, 1);
    const Mat l = interpolation_matrix(g, xs);
    CHECK((l.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-13);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 13; ++j)
            CHECK(l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  doctest::Approx(lagrange(nodes, j, xs[i])).epsilon(1e-11));

    // consistency with model evaluation
    BwlerModel m(TensorGrid({Grid1D::chebyshev(4)}));
    Vec theta(5);
    theta << 0.3, -1.2, 2.0, 0.7, -0.1;
    m.set_theta(theta);
    const auto x50 = uniform(50, 2);
    RowMat pts = Eigen::Map<const Vec>(x50.data(), 50);
    const auto vals = m.evaluate(pts);
    const Vec lt = interpolation_matrix(m.grid().axis(0), x50) * theta;
    for (int i = 0; i < 50; ++i) CHECK(std::abs(lt(i) - vals[static_cast<std::size_t>(i)]) <= 1e-13);
}

TEST_CASE("gram matrices") {
    for (std::size_t n : {2, 3, 8, 16, 40}) {
        const Grid1D g = Grid1D::chebyshev(n);
        const auto gm = gram_matrices(interpolation_matrix(g, g.nodes()), n);
        CHECK(gm.kappa_sq_pop == 2.0);
        CHECK(gm.kappa_sq_emp == doctest::Approx(1.0));
        CHECK((gm.g_emp - Mat::Identity(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1)) /
                              static_cast<double>(n + 1))
                  .norm() <= 1e-15);
    }
    // duplicated samples leave G_emp singular
    const Grid1D g = Grid1D::chebyshev(6);
    std::vector<double> few{0.1, 0.2, 0.3};
    CHECK(std::isinf(gram_matrices(interpolation_matrix(g, few), 6).kappa_sq_emp));
    CHECK_THROWS_AS(gram_matrices(Mat(0, 7), 6), std::invalid_argument);
}

TEST_CASE("exact population Gram") {
    // brute-force midpoint quadrature of l_j l_k dx/2
    const std::size_t n = 6;
    const Grid1D g = Grid1D::chebyshev(n);
    const std::size_t q = 200000;
    std::vector<double> xs(q);
    for (std::size_t i = 0; i < q; ++i) xs[i] = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(q);
    const Mat e = interpolation_matrix(g, xs);
    const Mat brute = e.transpose() * e / static_cast<double>(q);
    const Mat exact = population_gram_exact(n);
    CHECK((exact - brute).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(exact.sum() - 1.0) <= 1e-13);  // sum_jk l_j l_k = 1
    // not diagonal: off-diagonal mass is visible
    CHECK(std::abs(exact(0, 1)) > 1e-3);
}

TEST_CASE("empirical Gram concentrates on the population Gram") {
    const double k100 = median_gram_kappa(8, 100, 20);
    const double k1000 = median_gram_kappa(8, 1000, 20);
    const double k10000 = median_gram_kappa(8, 10000, 20);
    CHECK(k100 > k1000);
    CHECK(k1000 > k10000);
    const double limit = condition_number_sym(population_gram_exact(8));
    CHECK(k10000 == doctest::Approx(limit).epsilon(0.1));
}

TEST_CASE("lebesgue constant") {
    CHECK(lebesgue_constant(Grid1D::chebyshev(1), 100) == doctest::Approx(1.0).epsilon(1e-14));
    const double l10 = lebesgue_constant(Grid1D::chebyshev(10), 2000);
    CHECK(l10 >= 1.5);
    CHECK(l10 <= 3.0);
    double prev = 0.0;
    for (std::size_t n : {2, 4, 8, 16, 32, 64}) {
        const double l = lebesgue_constant(Grid1D::chebyshev(n), 40 * (n + 1) + 1);
        CHECK(l >= prev);
        CHECK(l <= 2.0 / pi * std::log(static_cast<double>(n)) + 1.0);
        prev = l;
    }
    CHECK_THROWS_AS(lebesgue_constant(Grid1D::chebyshev(10), 100), std::invalid_argument);
}

TEST_CASE("collocation matrix") {
    const TensorGrid g({Grid1D::chebyshev(8)});
    const std::vector<DiffOperator> spec{DiffOperator::spectral_for(g.axis(0))};
    const auto id = collocation_matrix(LinearOperatorSpec{{{1.0, {0}}}}, g, spec);
    CHECK(id.a == Mat::Identity(9, 9));

    const auto d = collocation_matrix(LinearOperatorSpec{{{1.0, {1}}}}, g, spec);
    Vec x2(9), two_x(9);
    for (int j = 0; j < 9; ++j) {
        const double x = g.axis(0).nodes()[static_cast<std::size_t>(j)];
        x2(j) = x * x;
        two_x(j) = 2 * x;
    }
    CHECK((d.a * x2 - two_x).cwiseAbs().maxCoeff() <= 1e-12);

    double prev = 0.0;
    for (std::size_t n : {8, 16, 32}) {
        const TensorGrid gn({Grid1D::chebyshev(n)});
        const auto sys =
            collocation_matrix(LinearOperatorSpec{{{1.0, {2}}}}, gn, {DiffOperator::spectral_for(gn.axis(0))}, true);
        const double k = kappa_sq(sys.a);
        CHECK(std::isfinite(k));
        CHECK(k > prev);
        prev = k;
    }

    // 2D Kronecker structure against the field operator
    auto wave = make_problem("wave");
    const TensorGrid g2({Grid1D::chebyshev(5, {0, 1}), Grid1D::chebyshev(6, {0, 1})});
    const auto sys = collocation_matrix(*wave, g2, wave->default_deriv(g2));
    BwlerModel m(g2);
    Vec theta = Vec::LinSpaced(static_cast<Eigen::Index>(g2.size()), -1, 2).array().sin();
    m.set_theta(theta);
    const std::size_t tt[2] = {2, 0}, xx[2] = {0, 2};
    const Vec expect = m.derivative_values(tt) - 4.0 * m.derivative_values(xx);
    CHECK((sys.a * theta - expect).cwiseAbs().maxCoeff() <= 1e-9 * expect.cwiseAbs().maxCoeff());

    auto burgers = make_problem("burgers");
    CHECK_THROWS_AS(collocation_matrix(*burgers, burgers->default_grid(), burgers->default_deriv(burgers->default_grid())),
                    std::invalid_argument);
}

TEST_CASE("operator mis-specification") {
    const Grid1D c16 = Grid1D::chebyshev(16);
    const auto spec = DiffOperator::spectral_for(c16);
    CHECK(epsilon_op(c16, 1, spec, spec) <= 1e-12);
    CHECK(epsilon_op(c16, 1, spec, DiffOperator::finite_difference(16)) <= 1e-8);

    EpsOpConfig cfg;
    cfg.trials = 100;
    const double e32 = epsilon_op(Grid1D::fourier(32), 1, DiffOperator::spectral_for(Grid1D::fourier(32)),
                                  DiffOperator::finite_difference(1), cfg);
    const double e64 = epsilon_op(Grid1D::fourier(64), 1, DiffOperator::spectral_for(Grid1D::fourier(64)),
                                  DiffOperator::finite_difference(1), cfg);
    CHECK(e32 / e64 >= 3.0);

    // wider stencils are closer to the spectral operator
    const Grid1D f48 = Grid1D::fourier(48);
    double prev = 1e300;
    for (std::size_t k : {1, 2, 3, 4}) {
        const double e = epsilon_op(f48, 1, DiffOperator::spectral_for(f48), DiffOperator::finite_difference(k), cfg);
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("rho fit") {
    std::vector<double> ns{4, 8, 12, 16, 20, 24, 28};
    std::vector<double> err;
    for (double n : ns) err.push_back(std::max(3.0 * std::pow(1.7, -n), 1e-15));
    CHECK(rho_fit(ns, err) == doctest::Approx(1.7).epsilon(1e-12));
    // plateau entries are ignored
    err = {1e-2, 1e-4, 1e-6, 5e-14, 6e-14};
    CHECK(rho_fit({1, 2, 3, 4, 5}, err) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(std::isnan(rho_fit({1, 2}, {1e-2, 1e-2})));
}

TEST_CASE("report round trip") {
    ExperimentReport r;
    r.seed = 42;
    r.config = {{"subcommand", "solve"}, {"problem", "convection"}, {"params", {{"c", 40.0}}}, {"lr", 1e-3}};
    r.metrics["l2re"] = 1.234567890123e-11;
    r.metrics["kappa"] = std::numeric_limits<double>::infinity();
    r.runtime["seconds"] = 3.25;
    TheoryProbe p;
    p.kind = "gram";
    p.n = 16;
    p.m = 4000;
    p.kappa_sq = std::numeric_limits<double>::infinity();
    p.lebesgue = 2.1;
    r.probes.push_back(p);
    r.traces.push_back({"main", {{0, 1.0, 0.5}, {1, 0.1, std::nullopt}, {2, 1e-300, 1.0 / 3.0}}});
    r.tables["rows"] = {{{"a", 1}}, {{"a", 2}}};

    const std::string text = dump_report(r);
    const auto back = parse_report(text);
    CHECK(dump_report(back) == text);
    CHECK(std::isinf(back.metrics.at("kappa")));
    CHECK(std::isinf(*back.probes[0].kappa_sq));
    CHECK(!back.probes[0].eps_op);
    CHECK(back.traces[0].rows[2].l2re == 1.0 / 3.0);
    CHECK(text.find("\"inf\"") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "bwler_report_test";
    std::filesystem::remove_all(dir);
    write_report(r, dir);
    CHECK(std::filesystem::exists(dir / "report.json"));
    const auto tr = read_trace_csv(dir / "trace.csv", "main");
    REQUIRE(tr.rows.size() == 3);
    CHECK(tr.rows[2].loss == 1e-300);
    CHECK(!tr.rows[1].l2re);
    CHECK(tr.rows[2].l2re == 1.0 / 3.0);
    std::ifstream in(dir / "report.json");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == text);
    std::filesystem::remove_all(dir);

    CHECK_THROWS(parse_report("{\"format\": \"other\"}"));
}

TEST_CASE("trace from a training state") {
    BwlerModel m(TensorGrid({Grid1D::chebyshev(4)}));
    TrainState st(m);
    st.loss = {4, 3, 2, 1};
    st.iteration = 3;
    st.l2re = {{0, 0.9}, {2, 0.4}, {3, 0.2}};
    const auto t = make_trace("x", st);
    REQUIRE(t.rows.size() == 4);
    CHECK(*t.rows[0].l2re == 0.9);
    CHECK(!t.rows[1].l2re);
    CHECK(*t.rows[3].l2re == 0.2);
}

TEST_CASE("decomposition experiment on a small convection problem") {
    auto p = make_problem("convection", {{"c", 2.0}});
    DecompositionConfig cfg;
    cfg.time_stencils = {DiffOperator::finite_difference(1), DiffOperator::finite_difference(2),
                         DiffOperator::spectral_for(Grid1D::chebyshev(16, {0, 1}))};
    cfg.grid = TensorGrid({Grid1D::chebyshev(16, {0, 1}), Grid1D::fourier(16)});
    cfg.steps = 40;
    cfg.nncg.rank = 60;
    cfg.nncg.cg_iters = 60;
    cfg.test_per_axis = 32;
    cfg.log_every = 5;
    const auto res = decomposition_experiment(*p, cfg);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[0].stencil == "fd:1");
    CHECK(res.rows[2].stencil == "spectral");
    CHECK(res.rows[0].plateau > res.rows[1].plateau);
    CHECK(res.rows[1].plateau > res.rows[2].plateau);
    CHECK(res.rows[0].kappa_sq < res.rows[2].kappa_sq);
    CHECK(res.report.traces.size() == 3);
    CHECK(res.report.tables["decomposition"].size() == 3);
    CHECK(dump_report(parse_report(dump_report(res.report))) == dump_report(res.report));
}
