#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bwler/diff.hpp"

using namespace bwler;
using std::numbers::pi;

namespace {

template <typename F>
std::vector<double> sample(std::span<const double> xs, F f) {
    std::vector<double> v;
    for (double x : xs) v.push_back(f(x));
    return v;
}

Vec as_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

// Finite-difference weights from the Vandermonde moment system
// sum_i w_i (x_i - z)^p / p! = delta_{p,m}, solved independently of Fornberg.
Vec moment_weights(const std::vector<double>& nodes, double z, int m) {
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Mat a(n, n);
    Vec rhs = Vec::Zero(n);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index i = 0; i < n; ++i) a(p, i) = std::pow(nodes[static_cast<std::size_t>(i)] - z, p) / std::tgamma(p + 1.0);
        if (p == m) rhs(p) = 1.0;
    }
    return a.fullPivLu().solve(rhs);
}

}  // namespace

TEST_CASE("cheb_fft_derivative on polynomials and exp") {
    auto x8 = cgl_nodes(8);
    for (double d : cheb_fft_derivative(sample(x8, [](double x) { return x; }))) CHECK(std::abs(d - 1.0) <= 1e-13);
    auto d2 = cheb_fft_derivative(sample(x8, [](double x) { return x * x; }));
    for (std::size_t j = 0; j < x8.size(); ++j) CHECK(std::abs(d2[j] - 2 * x8[j]) <= 1e-12);

    auto x20 = cgl_nodes(20);
    auto de = cheb_fft_derivative(sample(x20, [](double x) { return std::exp(x); }));
    for (std::size_t j = 0; j < x20.size(); ++j) CHECK(std::abs(de[j] - std::exp(x20[j])) <= 1e-11);

    std::vector<double> tiny{1.0, 2.0};
    CHECK_THROWS(cheb_fft_derivative(tiny));
}

TEST_CASE("cheb_fft_derivative is exact on every degree up to N") {
    for (std::size_t n = 2; n <= 20; ++n) {
        auto x = cgl_nodes(n);
        for (std::size_t deg = 0; deg <= n; ++deg) {
            // Chebyshev polynomial T_deg and its derivative deg*U_{deg-1}
            auto t = sample(x, [&](double s) { return std::cos(static_cast<double>(deg) * std::acos(std::clamp(s, -1.0, 1.0))); });
            auto d = cheb_fft_derivative(t);
            double scale = 1.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                double ref;
                const double dd = static_cast<double>(deg);
                if (std::abs(x[j]) == 1.0) ref = std::pow(x[j], dd + 1.0) * dd * dd;
                else {
                    const double th = std::acos(x[j]);
                    ref = dd * std::sin(dd * th) / std::sin(th);
                }
                scale = std::max(scale, std::abs(ref));
                CHECK(std::abs(d[j] - ref) <= 1e-12 * std::max(1.0, dd * dd));
            }
        }
    }
}

TEST_CASE("fourier differentiation matrix") {
    CHECK(fourier_diff_matrix(2).cwiseAbs().maxCoeff() <= 1e-16);
    CHECK(fourier_diff_matrix(4)(1, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    auto nodes = fourier_nodes(16);
    Vec s = as_vec(sample(nodes, [](double x) { return std::sin(x); }));
    Vec ds = fourier_diff_matrix(16) * s;
    for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(ds(static_cast<Eigen::Index>(j)) - std::cos(nodes[j])) <= 1e-12);
    Mat d = fourier_diff_matrix(12);
    CHECK((d + d.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("fornberg weights against the moment-system oracle") {
    const double h = 0.1;
    auto w1 = fornberg_weights(std::vector<double>{-h, 0, h}, 0.0, 2);
    CHECK(w1(1, 0) == doctest::Approx(-1 / (2 * h)));
    CHECK(std::abs(w1(1, 1)) <= 1e-12);
    CHECK(w1(1, 2) == doctest::Approx(1 / (2 * h)));
    CHECK(w1(2, 0) == doctest::Approx(1 / (h * h)));
    CHECK(w1(2, 1) == doctest::Approx(-2 / (h * h)));
    CHECK(w1(2, 2) == doctest::Approx(1 / (h * h)));
    auto w2 = fornberg_weights(std::vector<double>{0, h}, 0.0, 1);
    CHECK(w2(1, 0) == doctest::Approx(-1 / h));
    CHECK(w2(1, 1) == doctest::Approx(1 / h));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> nodes(5);
        for (auto& v : nodes) v = u(rng);
        const double z = u(rng);
        auto w = fornberg_weights(nodes, z, 3);
        for (int m = 0; m <= 3; ++m) {
            Vec ref = moment_weights(nodes, z, m);
            for (int i = 0; i < 5; ++i) CHECK(std::abs(w(m, i) - ref(i)) <= 1e-7 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
        }
    }
    CHECK_THROWS(fornberg_weights(std::vector<double>{0.0, 0.5, 0.5}, 0.0, 1));
    CHECK_THROWS(fornberg_weights(std::vector<double>{0.0, 0.5}, 0.0, 2));
}

TEST_CASE("fd_diff_matrix structure and accuracy") {
    CHECK_THROWS(fd_diff_matrix(Grid1D::chebyshev(8), 4, 1));
    CHECK_THROWS(fd_diff_matrix(Grid1D::chebyshev(8), 0, 1));

    for (std::size_t k : {1u, 2u, 3u}) {
        auto g = Grid1D::chebyshev(16);
        auto band = fd_diff_matrix(g, 1, k);
        CHECK(band.max_row_nonzeros() <= 2 * k + 1);
        Vec lin = as_vec(sample(g.canonical_nodes(), [](double x) { return 3 * x - 1; }));
        CHECK((band.apply(lin).array() - 3.0).abs().maxCoeff() <= 1e-12);
    }

    // periodic 3-point stencil on sin: error close to h^2/6 max|f'''|
    auto g = Grid1D::fourier(64);
    auto band = fd_diff_matrix(g, 1, 1);
    CHECK(band.periodic);
    Vec s = as_vec(sample(g.canonical_nodes(), [](double x) { return std::sin(x); }));
    Vec d = band.apply(s);
    double err = 0;
    for (std::size_t j = 0; j < 64; ++j) err = std::max(err, std::abs(d(static_cast<Eigen::Index>(j)) - std::cos(g.canonical_nodes()[j])));
    const double h = 2 * pi / 64;
    CHECK(err <= 2 * h * h / 6);
    CHECK(err >= 0.5 * h * h / 6);

    // global stencil reproduces the spectral second derivative of x^3
    auto c = Grid1D::chebyshev(16);
    auto glob = fd_diff_matrix(c, 2, 16);
    Vec cube = as_vec(sample(c.canonical_nodes(), [](double x) { return x * x * x; }));
    Vec dd = glob.apply(cube);
    for (std::size_t j = 0; j <= 16; ++j) CHECK(std::abs(dd(static_cast<Eigen::Index>(j)) - 6 * c.canonical_nodes()[j]) <= 1e-10);

    // sparse conversion agrees with banded application
    Vec r = Vec::Random(17);
    CHECK((glob.to_sparse() * r - glob.apply(r)).norm() <= 1e-10);
}

TEST_CASE("global FD agrees with the FFT derivative on exp") {
    for (std::size_t n : {4u, 8u, 16u, 24u, 32u}) {
        auto g = Grid1D::chebyshev(n);
        auto v = sample(g.canonical_nodes(), [](double x) { return std::exp(x); });
        Vec fd = fd_diff_matrix(g, 1, n).apply(as_vec(v));
        Vec sp = as_vec(cheb_fft_derivative(v));
        CHECK((fd - sp).norm() <= 1e-9 * sp.norm());
    }
}

TEST_CASE("FD order of accuracy on periodic data") {
    for (std::size_t k : {1u, 2u}) {
        double prev = 0;
        for (std::size_t n : {32u, 64u}) {
            auto g = Grid1D::fourier(n);
            Vec v = as_vec(sample(g.canonical_nodes(), [](double x) { return std::exp(std::sin(x)); }));
            Vec d = fd_diff_matrix(g, 1, k).apply(v);
            double err = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double x = g.canonical_nodes()[j];
                err = std::max(err, std::abs(d(static_cast<Eigen::Index>(j)) - std::cos(x) * std::exp(std::sin(x))));
            }
            if (prev > 0) CHECK(prev / err >= std::pow(2.0, 2.0 * static_cast<double>(k) - 1.0) * 0.7);
            prev = err;
        }
    }
}

TEST_CASE("derivative operators annihilate constants and are linear") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    for (auto g : {Grid1D::chebyshev(20, {0, 3}), Grid1D::fourier(24, {0, 1})}) {
        for (auto op : {DiffOperator::spectral_for(g), DiffOperator::finite_difference(2)}) {
            for (std::size_t m : {1u, 2u}) {
                Mat d = physical_derivative(g, op, m).to_dense();
                Vec one = Vec::Ones(d.cols());
                CHECK((d * one).cwiseAbs().maxCoeff() <= 1e-12 * static_cast<double>(g.n()) * std::pow(g.scale(), m) * static_cast<double>(g.n()));
                Vec u(d.cols()), w(d.cols());
                for (Eigen::Index i = 0; i < u.size(); ++i) {
                    u(i) = gauss(rng);
                    w(i) = gauss(rng);
                }
                Vec lhs = d * (1.5 * u - 0.25 * w);
                Vec rhs = 1.5 * (d * u) - 0.25 * (d * w);
                CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
            }
        }
    }
}

TEST_CASE("spectral conditioning grows with N") {
    double prev = 0;
    for (std::size_t n : {8u, 16u, 32u, 64u}) {
        Mat d = cheb_fft_diff_matrix(n);
        Eigen::JacobiSVD<Mat> svd(d);
        const auto& s = svd.singularValues();
        // restrict to the row space: drop the null direction of constants
        const double kappa = s(0) / s(s.size() - 2);
        CHECK(kappa > prev);
        prev = kappa;
    }
}

TEST_CASE("operator/basis compatibility") {
    CHECK_THROWS(canonical_derivative(Grid1D::fourier(8), {DiffMethod::ChebSpectral, 1}, 1));
    CHECK_THROWS(canonical_derivative(Grid1D::chebyshev(8), {DiffMethod::FourierMatrix, 1}, 1));
    CHECK(canonical_derivative(Grid1D::chebyshev(8), DiffOperator::finite_difference(1), 1).is_sparse());
    auto g = Grid1D::chebyshev(8);
    CHECK(parse_diff_operator("fd:3", g) == DiffOperator::finite_difference(3));
    CHECK(parse_diff_operator("spectral", g) == DiffOperator::spectral_for(g));
    CHECK(to_string(DiffOperator::finite_difference(2)) == "fd:2");
    CHECK_THROWS(parse_diff_operator("bogus", g));
}

TEST_CASE("axis_derivative") {
    TensorGrid g({Grid1D::chebyshev(8, {0, 1}), Grid1D::fourier(10)});
    Mat v(static_cast<Eigen::Index>(g.size()), 1);
    for (std::size_t i = 0; i < g.size(); ++i) v(static_cast<Eigen::Index>(i), 0) = g.node(i)[0];
    Mat d = axis_derivative(g, v, 0, 1, DiffOperator::spectral_for(g.axis(0)));
    CHECK((d.array() - 1.0).abs().maxCoeff() <= 1e-12);

    TensorGrid conv({Grid1D::chebyshev(81, {0, 1}), Grid1D::fourier(80)});
    Mat u(static_cast<Eigen::Index>(conv.size()), 1);
    for (std::size_t i = 0; i < conv.size(); ++i) {
        auto x = conv.node(i);
        u(static_cast<Eigen::Index>(i), 0) = std::sin(x[1] - 40 * x[0]);
    }
    Mat ut = axis_derivative(conv, u, 0, 1, DiffOperator::spectral_for(conv.axis(0)));
    Mat ux = axis_derivative(conv, u, 1, 1, DiffOperator::spectral_for(conv.axis(1)));
    CHECK((ut + 40 * ux).cwiseAbs().maxCoeff() <= 1e-8);

    TensorGrid sq({Grid1D::chebyshev(8), Grid1D::chebyshev(8)});
    Mat p(static_cast<Eigen::Index>(sq.size()), 1);
    for (std::size_t i = 0; i < sq.size(); ++i) {
        auto x = sq.node(i);
        p(static_cast<Eigen::Index>(i), 0) = x[0] * x[0] * x[1];
    }
    Mat pxx = axis_derivative(sq, p, 0, 2, DiffOperator::spectral_for(sq.axis(0)));
    for (std::size_t i = 0; i < sq.size(); ++i) CHECK(std::abs(pxx(static_cast<Eigen::Index>(i), 0) - 2 * sq.node(i)[1]) <= 1e-11);
    CHECK_THROWS(axis_derivative(g, v, 1, 1, {DiffMethod::ChebSpectral, 1}));
}
