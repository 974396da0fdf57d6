#include "doctest.h"

#include <cmath>
#include <random>

#include "bwler/optim.hpp"
#include "bwler/pde.hpp"

using namespace bwler;

namespace {

RowMat random_points(std::size_t m, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RowMat p(static_cast<Eigen::Index>(m), 1);
    for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, 0) = u(rng);
    return p;
}

// Dense evaluation matrix built column by column from unit node vectors.
Mat dense_eval(const BwlerModel& base, const RowMat& pts) {
    const auto n = static_cast<Eigen::Index>(base.grid().size());
    Mat e(pts.rows(), n);
    BwlerModel m = base;
    for (Eigen::Index j = 0; j < n; ++j) {
        m.set_theta(Vec::Unit(n, j));
        const auto v = m.evaluate(pts);
        for (Eigen::Index i = 0; i < pts.rows(); ++i) e(i, j) = v[static_cast<std::size_t>(i)];
    }
    return e;
}

struct Fit {
    BwlerModel model;
    RowMat pts;
    Vec y;
    LeastSquaresObjective obj;
    double lstar;
    Vec theta_star;
};

Fit make_fit(std::size_t n, std::size_t m, unsigned seed) {
    BwlerModel model(TensorGrid({Grid1D::chebyshev(n)}));
    RowMat pts = random_points(m, seed);
    Vec y(pts.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::exp(pts(i, 0)) + 0.05 * std::sin(40 * pts(i, 0));
    auto obj = interpolation_objective(model, pts, y);
    const Mat e = dense_eval(model, pts);
    const Vec ts = e.colPivHouseholderQr().solve(y);
    const double ls = (e * ts - y).squaredNorm() / static_cast<double>(m);
    return {model, pts, y, std::move(obj), ls, ts};
}

}  // namespace

TEST_CASE("cosine schedule endpoints and monotonicity") {
    CHECK(cosine_lr(0, 500, 1e-2, 1e-6) == doctest::Approx(1e-2).epsilon(1e-15));
    CHECK(cosine_lr(500, 500, 1e-2, 1e-6) == doctest::Approx(1e-6).epsilon(1e-12));
    double prev = 1.0;
    for (std::size_t t = 0; t <= 500; ++t) {
        const double lr = cosine_lr(t, 500, 1e-2, 1e-6);
        CHECK(lr <= prev);
        CHECK(lr >= 1e-6 * (1 - 1e-12));
        CHECK(lr <= 1e-2);
        prev = lr;
    }
    CHECK(cosine_lr(0, 10, 0.0, 1e-6) == 0.0);
    CHECK(cosine_lr(7, 10, 0.0, 1e-6) == 0.0);
}

TEST_CASE("power iteration matches the dense Hessian spectrum") {
    auto f = make_fit(12, 60, 3);
    Vec g;
    f.obj.value_and_gradient(f.model.theta(), g);
    const Mat e = dense_eval(f.model, f.pts);
    const Mat h = 2.0 / 60.0 * e.transpose() * e;
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const double lmax = es.eigenvalues().maxCoeff();
    CHECK(power_iteration_lmax(f.obj, HvpMode::GaussNewton, 1, 1000, 1e-14) == doctest::Approx(lmax).epsilon(1e-8));
}

TEST_CASE("gd auto step on an identity Gram converges in one step") {
    BwlerModel model(TensorGrid({Grid1D::chebyshev(16)}));
    const RowMat nodes = grid_points(model.grid());
    Vec y(nodes.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::cos(3 * nodes(i, 0));
    auto obj = interpolation_objective(model, nodes, y);
    TrainState st(model);
    run_gd(obj, st, 1, GdConfig{});
    CHECK((st.model.theta() - y).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(st.loss.size() == 2);
    CHECK(st.loss.back() <= 1e-24);
}

TEST_CASE("gd auto step obeys the condition-number rate") {
    auto f = make_fit(10, 40, 5);
    const Mat e = dense_eval(f.model, f.pts);
    Eigen::SelfAdjointEigenSolver<Mat> es(e.transpose() * e);
    const double kappa = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    TrainState st(f.model);
    run_gd(f.obj, st, 400, GdConfig{});
    REQUIRE(st.loss.size() == 401);
    const double gap0 = st.loss.front() - f.lstar;
    for (std::size_t t = 0; t < st.loss.size(); t += 50) {
        const double bound = std::pow(1.0 - 1.0 / kappa, 2.0 * static_cast<double>(t)) * gap0;
        CHECK(st.loss[t] - f.lstar <= bound * (1 + 1e-6) + 1e-14);
    }
    for (std::size_t t = 1; t < st.loss.size(); ++t) CHECK(st.loss[t] <= st.loss[t - 1] * (1 + 1e-14));
}

TEST_CASE("gd auto step requires a quadratic objective") {
    auto p = make_problem("reaction");
    BwlerModel m(TensorGrid({Grid1D::chebyshev(6, {0, 1}), Grid1D::chebyshev(6, {0, 6.283185307179586})}));
    auto obj = build_objective(*p, m, 1.0, collocation_points(*p, m.grid(), {}));
    TrainState st(m);
    CHECK_THROWS_AS(run_gd(obj, st, 1, GdConfig{}), std::invalid_argument);
}

TEST_CASE("fixed points are kept by every optimizer") {
    BwlerModel model(TensorGrid({Grid1D::chebyshev(8)}));
    const RowMat pts = random_points(30, 9);
    Vec theta(model.grid().size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = 0.1 * static_cast<double>(i * i % 7);
    BwlerModel exact = model;
    exact.set_theta(theta);
    const auto vals = exact.evaluate(pts);
    const Vec y = Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    auto obj = interpolation_objective(model, pts, y);

    TrainState a(exact), b(exact), c(exact);
    run_gd(obj, a, 5, GdConfig{StepSize::Fixed(0.1), 0.0});
    run_adam(obj, b, 5, AdamConfig{});
    run_nncg(obj, c, 5, NncgConfig{4, 10});
    for (const auto* s : {&a, &b, &c}) CHECK((s->model.theta() - theta).norm() <= 1e-12);
}

TEST_CASE("adam with lr0 = 0 leaves the parameters unchanged") {
    auto f = make_fit(8, 30, 2);
    Vec start = Vec::LinSpaced(9, -1, 1);
    f.model.set_theta(start);
    TrainState st(f.model);
    AdamConfig cfg;
    cfg.lr0 = 0.0;
    run_adam(f.obj, st, 20, cfg);
    CHECK(st.model.theta() == start);
    CHECK(st.step.size() == 20);
    for (double s : st.step) CHECK(s == 0.0);
}

TEST_CASE("adam decreases an interpolation loss") {
    auto f = make_fit(8, 50, 4);
    TrainState st(f.model);
    AdamConfig cfg;
    cfg.lr0 = 5e-2;
    run_adam(f.obj, st, 2000, cfg);
    CHECK(st.loss.back() < 1e-2 * st.loss.front());
}

TEST_CASE("nncg with full rank solves a quadratic in one step") {
    auto f = make_fit(14, 80, 6);
    TrainState st(f.model);
    NncgConfig cfg;
    cfg.rank = 15;
    cfg.cg_iters = 40;
    run_nncg(f.obj, st, 1, cfg);
    CHECK(st.loss.back() - f.lstar <= 1e-10 * st.loss.front());
    CHECK((st.model.theta() - f.theta_star).norm() <= 1e-5 * f.theta_star.norm());
}

TEST_CASE("nncg is monotone and deterministic on a nonlinear problem") {
    auto p = make_problem("reaction");
    BwlerModel m(TensorGrid({Grid1D::chebyshev(10, {0, 1}), Grid1D::chebyshev(10, {0, 6.283185307179586})}));
    auto make = [&](const BwlerModel& model) {
        return build_objective(*p, model, 1.0, collocation_points(*p, model.grid(), {}));
    };
    NncgConfig cfg;
    cfg.rank = 30;
    cfg.cg_iters = 30;
    cfg.precond_every = 5;
    cfg.seed = 11;
    auto o1 = make(m);
    TrainState s1(m);
    run_nncg(o1, s1, 200, cfg);
    for (std::size_t t = 1; t < s1.loss.size(); ++t) CHECK(s1.loss[t] <= s1.loss[t - 1]);
    CHECK(s1.loss.back() < 1e-3 * s1.loss.front());

    auto o2 = make(m);
    TrainState s2(m);
    run_nncg(o2, s2, 200, cfg);
    CHECK(s1.loss == s2.loss);
    CHECK(s1.model.theta() == s2.model.theta());
}

TEST_CASE("nncg exact Hessian mode") {
    // linear residuals: exact and Gauss-Newton products coincide
    auto f = make_fit(10, 50, 7);
    NncgConfig cfg{8, 10};
    TrainState a(f.model), b(f.model);
    run_nncg(f.obj, a, 3, cfg);
    cfg.hvp_mode = HvpMode::Exact;
    run_nncg(f.obj, b, 3, cfg);
    CHECK(a.loss == b.loss);

    // indefinite curvature far from the solution aborts after one damping increase
    auto p = make_problem("burgers");
    BwlerModel m(TensorGrid({Grid1D::chebyshev(8, {0, 1}), Grid1D::chebyshev(8, {-1, 1})}));
    auto obj = build_objective(*p, m, 10.0, collocation_points(*p, m.grid(), {}));
    cfg.rank = 20;
    cfg.cg_iters = 20;
    TrainState st(m);
    CHECK_THROWS_AS(run_nncg(obj, st, 10, cfg), NumericalError);
}

TEST_CASE("divergent runs raise NumericalError") {
    auto f = make_fit(10, 40, 8);
    TrainState st(f.model);
    CHECK_THROWS_AS(run_gd(f.obj, st, 5000, GdConfig{StepSize::Fixed(1e6), 0.0}), NumericalError);
}

TEST_CASE("config validation") {
    auto f = make_fit(4, 10, 1);
    TrainState st(f.model);
    CHECK_THROWS_AS(run_gd(f.obj, st, 1, GdConfig{StepSize::Fixed(-1.0), 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(run_nncg(f.obj, st, 1, NncgConfig{50, 10}), std::invalid_argument);
    CHECK_THROWS_AS(run_nncg(f.obj, st, 1, NncgConfig{2, 0}), std::invalid_argument);
}

TEST_CASE("stages continue the history and refine the grid") {
    BwlerModel coarse(TensorGrid({Grid1D::chebyshev(6)}));
    const RowMat pts = random_points(200, 12);
    Vec y(pts.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::tanh(2 * pts(i, 0));
    ObjectiveFactory make = [&](const BwlerModel& m) { return interpolation_objective(m, pts, y); };

    AdamConfig adam;
    adam.lr0 = 1e-2;
    std::vector<Stage> stages{{adam, 50, std::nullopt, std::nullopt},
                              {NncgConfig{10, 20}, 5, TensorGrid({Grid1D::chebyshev(20)}), std::nullopt}};
    auto st = run_stages(stages, coarse, make, {});
    CHECK(st.model.grid().size() == 21);
    CHECK(st.stage_starts == std::vector<std::size_t>{0, 50});
    CHECK(st.iteration == st.step.size());
    CHECK(st.loss.size() == st.iteration + 1);
    CHECK(st.loss.back() < st.loss[50]);

    std::vector<Stage> bad{{adam, 1, TensorGrid({Grid1D::chebyshev(6, {0, 2})}), std::nullopt}};
    CHECK_THROWS_AS(run_stages(bad, coarse, make, {}), DomainError);
}

TEST_CASE("l2re is logged on schedule") {
    auto f = make_fit(8, 30, 13);
    TrainOptions opts;
    opts.log_every = 10;
    opts.l2re = [](const BwlerModel& m) { return m.theta().norm(); };
    TrainState st(f.model);
    run_adam(f.obj, st, 25, AdamConfig{}, opts);
    REQUIRE(st.l2re.size() == 4);
    CHECK(st.l2re[0].iteration == 0);
    CHECK(st.l2re[2].iteration == 20);
    CHECK(st.l2re[3].iteration == 25);
}
