#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bwler {

using Complex = std::complex<double>;

/// Unnormalized DFT coefficients X_k = sum_n x_n exp(-2 pi i k n / L).
struct SpectrumBuffer {
    std::vector<Complex> values;

    std::size_t length() const { return values.size(); }
};

/// Forward DFT of arbitrary length in O(L log L): mixed radix over small
/// prime factors, Bluestein's chirp-z for the rest.
SpectrumBuffer fft(std::span<const Complex> signal);
SpectrumBuffer fft(std::span<const double> signal);

/// Inverse DFT with 1/L normalization.
std::vector<Complex> ifft(const SpectrumBuffer& spectrum);

/// [u_0, ..., u_N, u_{N-1}, ..., u_1], the period-2N even extension of
/// samples taken at the CGL angles.
std::vector<double> even_extension(std::span<const double> values);

}  // namespace bwler
