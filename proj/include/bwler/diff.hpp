#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bwler/grid.hpp"
#include "bwler/kernels.hpp"
#include "bwler/types.hpp"

namespace bwler {

enum class DiffMethod { ChebSpectral, FourierMatrix, FiniteDifference };

/// First derivative at the CGL nodes via the even-extension FFT route
/// (canonical domain [-1, 1]; the caller applies the interval scale).
std::vector<double> cheb_fft_derivative(std::span<const double> values);

/// Dense realization of cheb_fft_derivative, column j = derivative of e_j.
Mat cheb_fft_diff_matrix(std::size_t n);

/// Fourier differentiation matrix on N equispaced points of [0, 2pi):
/// D_ij = (-1)^(i-j)/2 cot(pi (i-j)/N), zero diagonal. Odd N is accepted
/// but untested against a reference.
Mat fourier_diff_matrix(std::size_t n);

/// Finite-difference weights by Fornberg's recurrence. Row d of the result
/// holds the weights of the d-th derivative at z, d = 0..max_order.
Mat fornberg_weights(std::span<const double> nodes, double z, std::size_t max_order);

/// Banded matrix stored by diagonals: diagonals[d][i] = A(i, i + offsets[d]),
/// with column indices wrapped modulo n when periodic.
struct BandedMatrix {
    std::size_t n = 0;
    bool periodic = false;
    std::vector<int> offsets;
    std::vector<std::vector<double>> diagonals;

    SparseRowMat to_sparse() const;
    Vec apply(const Vec& u) const;
    std::size_t max_row_nonzeros() const;
};

/// m-th derivative finite-difference matrix of half-bandwidth k on the
/// canonical nodes of `grid`. Chebyshev rows use the 2k+1 nearest nodes,
/// shifted inward at the boundary; Fourier rows wrap periodically.
/// k >= N yields a global stencil.
BandedMatrix fd_diff_matrix(const Grid1D& grid, std::size_t order, std::size_t half_bandwidth);

/// Derivative method choice for one axis.
struct DiffOperator {
    DiffMethod method = DiffMethod::ChebSpectral;
    std::size_t half_bandwidth = 1;  // finite differences only

    static DiffOperator spectral_for(const Grid1D& grid);
    static DiffOperator finite_difference(std::size_t k) { return {DiffMethod::FiniteDifference, k}; }

    bool operator==(const DiffOperator&) const = default;
};

std::string to_string(const DiffOperator& op);
DiffOperator parse_diff_operator(const std::string& text, const Grid1D& grid);

/// Canonical-domain matrix for the m-th derivative on one axis. Spectral
/// orders are obtained by repeated first-derivative application.
AxisOperator canonical_derivative(const Grid1D& grid, const DiffOperator& method, std::size_t order);

/// Physical-domain derivative operator: canonical matrix times scale^m.
AxisOperator physical_derivative(const Grid1D& grid, const DiffOperator& method, std::size_t order);

/// Differentiate a batch of node tensors along one axis (physical units).
Mat axis_derivative(const TensorGrid& grid, const Mat& values, std::size_t axis, std::size_t order,
                    const DiffOperator& method);

}  // namespace bwler
