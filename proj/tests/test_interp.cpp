#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bwler/interp.hpp"

using namespace bwler;
using std::numbers::pi;

namespace {

std::vector<double> sample(const Grid1D& g, double (*f)(double)) {
    std::vector<double> v;
    for (double x : g.nodes()) v.push_back(f(x));
    return v;
}

double l2re(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

double sin4(double x) { return std::sin(4 * x); }

}  // namespace

TEST_CASE("bary_eval basics") {
    auto g = Grid1D::chebyshev(9);
    std::vector<double> c(g.size(), 2.5);
    for (double x : {-1.0, -0.3, 0.0, 0.77, 1.0}) CHECK(bary_eval({g, c}, x) == doctest::Approx(2.5).epsilon(1e-15));
    std::vector<double> id(g.nodes().begin(), g.nodes().end());
    CHECK(std::abs(bary_eval({g, id}, 0.37) - 0.37) <= 1e-14);
    auto g1 = Grid1D::chebyshev(1);
    std::vector<double> lin{1.0, -1.0};
    CHECK(std::abs(bary_eval({g1, lin}, 0.37) - 0.37) <= 1e-14);
}

TEST_CASE("bary_eval of sin(4x), N=40") {
    auto g = Grid1D::chebyshev(40);
    auto v = sample(g, sin4);
    std::vector<double> xs(1000), ref(1000);
    for (int i = 0; i < 1000; ++i) {
        xs[i] = -1.0 + 2.0 * i / 999.0;
        ref[i] = sin4(xs[i]);
    }
    CHECK(l2re(bary_eval({g, v}, xs), ref) <= 1e-11);
}

TEST_CASE("bary_eval rejects bad input") {
    auto g = Grid1D::chebyshev(4);
    std::vector<double> v(5, 0.0);
    CHECK_THROWS_AS(bary_eval({g, v}, 1.5), DomainError);
    v[2] = std::nan("");
    CHECK_THROWS(bary_eval({g, v}, 0.1));
    std::vector<double> short_v(3, 0.0);
    CHECK_THROWS(bary_eval({g, short_v}, 0.1));
}

TEST_CASE("node reproduction is bitwise") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss;
    for (auto g : {Grid1D::chebyshev(16, {0, 3}), Grid1D::chebyshev(81, {0, 1})}) {
        std::vector<double> v(g.size());
        for (auto& e : v) e = gauss(rng);
        for (std::size_t j = 0; j < g.size(); ++j) CHECK(bary_eval({g, v}, g.nodes()[j]) == v[j]);
    }
    auto f = Grid1D::fourier(16);
    std::vector<double> v(16);
    for (auto& e : v) e = gauss(rng);
    for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(fourier_eval({f, v}, f.nodes()[j]) - v[j]) <= 1e-14);
}

TEST_CASE("polynomial exactness") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t n = 1; n <= 20; ++n) {
        auto g = Grid1D::chebyshev(n);
        std::vector<double> coef(n + 1);
        for (auto& c : coef) c = u(rng);
        auto p = [&](double x) {
            double acc = 0;
            for (std::size_t k = coef.size(); k-- > 0;) acc = acc * x + coef[k];
            return acc;
        };
        std::vector<double> v;
        double vmax = 0;
        for (double x : g.nodes()) {
            v.push_back(p(x));
            vmax = std::max(vmax, std::abs(v.back()));
        }
        for (int i = 0; i < 100; ++i) {
            const double x = u(rng);
            CHECK(std::abs(bary_eval({g, v}, x) - p(x)) <= 1e-12 * vmax);
        }
    }
}

TEST_CASE("spectral convergence for sin(4x)") {
    std::vector<double> xs(1000), ref(1000);
    for (int i = 0; i < 1000; ++i) {
        xs[i] = -1.0 + 2.0 * i / 999.0;
        ref[i] = sin4(xs[i]);
    }
    std::vector<double> logs;
    for (std::size_t n = 8; n <= 32; n += 4) {
        auto g = Grid1D::chebyshev(n);
        auto v = sample(g, sin4);
        logs.push_back(std::log10(std::max(l2re(bary_eval({g, v}, xs), ref), 1e-16)));
    }
    // average decrease per step of N until the floor at 1e-13
    std::size_t last = 0;
    while (last + 1 < logs.size() && logs[last] > -13.0) ++last;
    CHECK(last >= 2);
    CHECK((logs[0] - logs[last]) / static_cast<double>(last) >= 0.3);
    for (std::size_t i = 1; i <= last; ++i) CHECK(logs[i] < logs[i - 1]);
}

TEST_CASE("lebesgue stability on random sign data") {
    std::mt19937_64 rng(4);
    for (std::size_t n : {4u, 8u, 16u, 32u, 64u}) {
        auto g = Grid1D::chebyshev(n);
        std::vector<double> v(g.size());
        for (auto& e : v) e = (rng() & 1) ? 1.0 : -1.0;
        double sup = 0;
        for (int i = 0; i < 2000; ++i) sup = std::max(sup, std::abs(bary_eval({g, v}, -1.0 + 2.0 * i / 1999.0)));
        CHECK(sup <= 2.0 + 2.0 / pi * std::log(static_cast<double>(n + 1)));
    }
}

TEST_CASE("fourier_eval") {
    auto g8 = Grid1D::fourier(8);
    std::vector<double> c(8, -1.25);
    CHECK(fourier_eval({g8, c}, 1.1) == doctest::Approx(-1.25).epsilon(1e-15));
    std::vector<double> s;
    for (double x : g8.nodes()) s.push_back(std::sin(x));
    CHECK(std::abs(fourier_eval({g8, s}, pi / 3) - std::sin(pi / 3)) <= 1e-13);

    auto g16 = Grid1D::fourier(16);
    std::vector<double> v;
    for (double x : g16.nodes()) v.push_back(std::sin(3 * x) + std::cos(x));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 2 * pi);
    double err = 0;
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        err = std::max(err, std::abs(fourier_eval({g16, v}, x) - std::sin(3 * x) - std::cos(x)));
    }
    CHECK(err <= 1e-12);
}

TEST_CASE("fourier Nyquist mode is a real cosine") {
    auto g = Grid1D::fourier(8);
    std::vector<double> v;
    for (double x : g.nodes()) v.push_back(std::cos(4 * x));
    for (double x : {0.1, 0.7, 2.2, 5.0}) CHECK(std::abs(fourier_eval({g, v}, x) - std::cos(4 * x)) <= 1e-13);
}

TEST_CASE("axis functional matches direct evaluation") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> gauss;
    for (auto g : {Grid1D::chebyshev(12, {0, 2}), Grid1D::fourier(12), Grid1D::fourier(9, {-1, 1})}) {
        std::vector<double> v(g.size());
        for (auto& e : v) e = gauss(rng);
        for (double t : {0.13, 0.5, 0.97}) {
            const double x = g.interval().a + t * g.interval().length();
            auto f = axis_functional(g, x);
            double dot = 0;
            for (std::size_t j = 0; j < v.size(); ++j) dot += f.weights[j] * v[j];
            const double direct = g.basis() == Basis::Chebyshev ? bary_eval({g, v}, x) : fourier_eval({g, v}, x);
            CHECK(std::abs(dot - direct) <= 1e-12);
        }
    }
}

TEST_CASE("tensor_eval") {
    TensorGrid ones({Grid1D::chebyshev(5), Grid1D::fourier(6)});
    std::vector<double> v(ones.size(), 1.0);
    std::vector<double> p{0.2, 4.0};
    CHECK(tensor_eval({ones, v}, p) == doctest::Approx(1.0).epsilon(1e-14));

    TensorGrid g({Grid1D::chebyshev(4), Grid1D::chebyshev(4)});
    std::vector<double> tx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto x = g.node(i);
        tx[i] = x[0] * x[1];
    }
    std::vector<double> q{0.5, -0.25};
    CHECK(std::abs(tensor_eval({g, tx}, q) + 0.125) <= 1e-14);
    std::vector<double> bad{0.1};
    CHECK_THROWS(tensor_eval({g, tx}, bad));
}

TEST_CASE("tensor_eval on the convection grid") {
    TensorGrid g({Grid1D::chebyshev(81, {0, 1}), Grid1D::fourier(80)});
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto x = g.node(i);
        v[i] = std::sin(x[1] - 40 * x[0]);
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(0, 1), ux(0, 2 * pi);
    RowMat pts(500, 2);
    std::vector<double> ref(500);
    for (int i = 0; i < 500; ++i) {
        pts(i, 0) = ut(rng);
        pts(i, 1) = ux(rng);
        ref[i] = std::sin(pts(i, 1) - 40 * pts(i, 0));
    }
    CHECK(l2re(tensor_eval({g, v}, pts), ref) <= 1e-9);
}

TEST_CASE("tensor_eval_product agrees with pointwise evaluation") {
    TensorGrid g({Grid1D::chebyshev(6, {0, 1}), Grid1D::fourier(8)});
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss;
    Mat vals(static_cast<Eigen::Index>(g.size()), 2);
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals.data()[i] = gauss(rng);
    std::vector<std::vector<double>> q{{0.0, 0.3, 0.9}, {0.5, 1.5, 3.0, 6.0}};
    Mat out = tensor_eval_product(g, vals, q);
    REQUIRE(out.rows() == 12);
    for (int c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                std::vector<double> p{q[0][i], q[1][j]};
                const double ref = tensor_eval({g, std::span<const double>(vals.col(c).data(), g.size())}, p);
                CHECK(std::abs(out(static_cast<Eigen::Index>(i * 4 + j), c) - ref) <= 1e-12);
            }
}
