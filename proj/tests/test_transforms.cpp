#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bwler/transforms.hpp"

using namespace bwler;

namespace {

std::vector<Complex> direct_dft(const std::vector<Complex>& x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{0, 0};
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
            acc += x[j] * Complex{std::cos(ang), std::sin(ang)};
        }
        out[k] = acc;
    }
    return out;
}

std::vector<Complex> random_signal(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<Complex> v(n);
    for (auto& c : v) c = {g(rng), g(rng)};
    return v;
}

double norm(const std::vector<Complex>& v) {
    double s = 0;
    for (auto c : v) s += std::norm(c);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("fft small cases") {
    std::vector<double> ones{1, 1, 1, 1};
    auto s = fft(std::span<const double>(ones)).values;
    CHECK(std::abs(s[0] - Complex(4, 0)) <= 1e-15);
    for (int k = 1; k < 4; ++k) CHECK(std::abs(s[k]) <= 1e-15);

    std::vector<double> imp{1, 0, 0, 0};
    for (auto c : fft(std::span<const double>(imp)).values) CHECK(std::abs(c - Complex(1, 0)) <= 1e-15);

    std::vector<double> x{0, 1, 0, -1};
    auto t = fft(std::span<const double>(x)).values;
    const Complex expect[] = {{0, 0}, {0, -2}, {0, 0}, {0, 2}};
    for (int k = 0; k < 4; ++k) CHECK(std::abs(t[k] - expect[k]) <= 1e-14);
}

TEST_CASE("ifft small cases") {
    SpectrumBuffer s{{{4, 0}, {0, 0}, {0, 0}, {0, 0}}};
    for (auto c : ifft(s)) CHECK(std::abs(c - Complex(1, 0)) <= 1e-15);
    SpectrumBuffer t{{{0, 0}, {0, -2}, {0, 0}, {0, 2}}};
    const double expect[] = {0, 1, 0, -1};
    auto r = ifft(t);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(r[k] - Complex(expect[k], 0)) <= 1e-15);
}

TEST_CASE("fft agrees with the direct DFT for every length up to 64") {
    for (std::size_t n = 1; n <= 64; ++n) {
        auto x = random_signal(n, static_cast<unsigned>(n));
        auto got = fft(x).values;
        auto ref = direct_dft(x);
        const double tol = 1e-10 * norm(x);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(got[k] - ref[k]) <= tol);
    }
}

TEST_CASE("fft handles benchmark sizes and large primes") {
    for (std::size_t n : {81u, 160u, 161u, 162u, 321u, 640u, 641u, 1009u}) {
        auto x = random_signal(n, 7);
        auto got = fft(x).values;
        auto ref = direct_dft(x);
        double err = 0;
        for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(got[k] - ref[k]));
        CHECK(err <= 1e-10 * norm(x));
    }
}

TEST_CASE("round trip") {
    for (std::size_t n : {1u, 7u, 64u, 97u, 1000u, 4096u}) {
        auto x = random_signal(n, 3);
        auto back = ifft(fft(x));
        double err = 0;
        for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(back[k] - x[k]));
        CHECK(err <= 1e-13 * norm(x));
    }
}

TEST_CASE("parseval") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (std::size_t n : {8u, 31u, 100u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = g(rng);
        double sx = 0;
        for (double v : x) sx += v * v;
        double sf = 0;
        for (auto c : fft(std::span<const double>(x)).values) sf += std::norm(c);
        CHECK(sf == doctest::Approx(static_cast<double>(n) * sx).epsilon(1e-12));
    }
}

TEST_CASE("even extension") {
    std::vector<double> abc{1.5, -2.0, 3.25};
    CHECK(even_extension(abc) == std::vector<double>{1.5, -2.0, 3.25, -2.0});
    std::vector<double> ab{4.0, 5.0};
    CHECK(even_extension(ab) == std::vector<double>{4.0, 5.0});
    std::vector<double> v{1, 2, 3, 4};
    CHECK(even_extension(v) == std::vector<double>{1, 2, 3, 4, 3, 2});

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (std::size_t n : {2u, 9u, 40u, 81u}) {
        std::vector<double> x(n + 1);
        for (auto& e : x) e = g(rng);
        double nx = 0;
        for (double e : x) nx += e * e;
        for (auto c : fft(even_extension(x)).values) CHECK(std::abs(c.imag()) <= 1e-12 * std::sqrt(nx));
    }
}
