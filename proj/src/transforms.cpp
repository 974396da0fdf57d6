#include "bwler/transforms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bwler {
namespace {

constexpr std::size_t kMaxDirectRadix = 13;

Complex unit_root(std::size_t k, std::size_t n) {
    // exp(-2 pi i k / n) with k reduced first so the angle stays small
    k %= n;
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    return {std::cos(ang), std::sin(ang)};
}

std::size_t smallest_factor(std::size_t n) {
    if (n % 2 == 0) return 2;
    for (std::size_t p = 3; p * p <= n; p += 2)
        if (n % p == 0) return p;
    return n;
}

void transform(const Complex* in, std::size_t stride, std::size_t n, Complex* out);

void bluestein(const Complex* in, std::size_t stride, std::size_t n, Complex* out) {
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    // chirp w_k = exp(-i pi k^2 / n); k^2 reduced mod 2n keeps the phase exact
    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<Complex> a(m, Complex{}), b(m, Complex{});
    for (std::size_t k = 0; k < n; ++k) a[k] = in[k * stride] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);

    std::vector<Complex> fa(m), fb(m);
    transform(a.data(), 1, m, fa.data());
    transform(b.data(), 1, m, fb.data());
    for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
    // inverse via conjugation
    for (auto& v : fa) v = std::conj(v);
    transform(fa.data(), 1, m, a.data());
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) out[k] = std::conj(a[k]) * inv_m * chirp[k];
}

// Recursive decimation in time over the smallest prime factor.
void transform(const Complex* in, std::size_t stride, std::size_t n, Complex* out) {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = smallest_factor(n);
    if (p == n && n > kMaxDirectRadix) {
        bluestein(in, stride, n, out);
        return;
    }
    const std::size_t m = n / p;
    // out[q*m .. q*m+m) holds the length-m transform of the q-th decimated subsequence
    for (std::size_t q = 0; q < p; ++q) transform(in + q * stride, stride * p, m, out + q * m);

    std::vector<Complex> scratch(n);
    std::vector<Complex> root_p(p);
    for (std::size_t r = 0; r < p; ++r) root_p[r] = unit_root(r, p);
    std::vector<Complex> terms(p);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t q = 0; q < p; ++q) terms[q] = out[q * m + k] * unit_root(q * k, n);
        for (std::size_t s = 0; s < p; ++s) {
            Complex acc = terms[0];
            for (std::size_t q = 1; q < p; ++q) acc += terms[q] * root_p[(q * s) % p];
            scratch[k + s * m] = acc;
        }
    }
    std::copy(scratch.begin(), scratch.end(), out);
}

}  // namespace

SpectrumBuffer fft(std::span<const Complex> signal) {
    if (signal.empty()) throw std::invalid_argument("fft: empty signal");
    SpectrumBuffer spec;
    spec.values.resize(signal.size());
    transform(signal.data(), 1, signal.size(), spec.values.data());
    return spec;
}

SpectrumBuffer fft(std::span<const double> signal) {
    std::vector<Complex> c(signal.begin(), signal.end());
    return fft(std::span<const Complex>(c));
}

std::vector<Complex> ifft(const SpectrumBuffer& spectrum) {
    const std::size_t n = spectrum.length();
    if (n == 0) throw std::invalid_argument("ifft: empty spectrum");
    std::vector<Complex> conj_in(n);
    for (std::size_t k = 0; k < n; ++k) conj_in[k] = std::conj(spectrum.values[k]);
    std::vector<Complex> out(n);
    transform(conj_in.data(), 1, n, out.data());
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : out) v = std::conj(v) * inv;
    return out;
}

std::vector<double> even_extension(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("even_extension: need N >= 1 (N+1 values)");
    const std::size_t n = values.size() - 1;
    std::vector<double> v(values.begin(), values.end());
    v.reserve(2 * n);
    for (std::size_t j = n - 1; j >= 1; --j) v.push_back(values[j]);
    return v;
}

}  // namespace bwler
