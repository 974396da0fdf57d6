#pragma once

#include <span>
#include <vector>

#include "bwler/grid.hpp"
#include "bwler/kernels.hpp"
#include "bwler/types.hpp"

namespace bwler {

/// A query coincides with a node when the canonical distance is at most this.
inline constexpr double kNodeHitTolerance = 1e-14;

/// Node values over a 1-D grid.
struct NodeValues1D {
    const Grid1D& grid;
    std::span<const double> values;
};

/// Node values over a tensor grid (row-major, last axis fastest).
struct NodeValues {
    const TensorGrid& grid;
    std::span<const double> values;
};

/// Barycentric interpolation on a Chebyshev axis.
double bary_eval(const NodeValues1D& nv, double x);
std::vector<double> bary_eval(const NodeValues1D& nv, std::span<const double> xs);

/// Trigonometric interpolation on a Fourier axis. Coefficients come from
/// an FFT of the node values; indices above N/2 are negative frequencies
/// and, for even N, the Nyquist term is split as a cosine.
double fourier_eval(const NodeValues1D& nv, double x);
std::vector<double> fourier_eval(const NodeValues1D& nv, std::span<const double> xs);

/// Cardinal-function values l_j(x) for every node j of the axis: the
/// evaluation functional of the interpolant at x. On a node hit the
/// result is the unit vector (`hit` set to the node index).
struct AxisFunctional {
    std::vector<double> weights;
    long hit = -1;
};
AxisFunctional axis_functional(const Grid1D& grid, double x);

/// Dense evaluation matrix (queries x nodes) for one axis.
Mat evaluation_matrix(const Grid1D& grid, std::span<const double> xs);

/// Interpolant value at a point of the tensor domain.
double tensor_eval(const NodeValues& nv, std::span<const double> point);
/// Batch evaluation; `points` holds one point per row.
std::vector<double> tensor_eval(const NodeValues& nv, const RowMat& points);

/// Evaluation of a batch of node tensors on a product of per-axis query
/// coordinates. The result holds one row-major tensor per column.
Mat tensor_eval_product(const TensorGrid& grid, const Mat& values,
                        const std::vector<std::vector<double>>& axis_queries);

}  // namespace bwler
