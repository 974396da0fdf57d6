#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "bwler/types.hpp"

namespace bwler {

/// Linear map acting along one tensor axis, n_out x n_in. Dense for
/// spectral operators and evaluation functionals, sparse for banded
/// finite-difference stencils.
class AxisOperator {
public:
    AxisOperator() = default;
    explicit AxisOperator(Mat dense) : op_(std::move(dense)) {}
    explicit AxisOperator(SparseRowMat sparse) : op_(std::move(sparse)) {}

    Eigen::Index rows() const;
    Eigen::Index cols() const;
    bool is_sparse() const { return std::holds_alternative<SparseRowMat>(op_); }

    const Mat& dense() const { return std::get<Mat>(op_); }
    const SparseRowMat& sparse() const { return std::get<SparseRowMat>(op_); }
    Mat to_dense() const;

    /// Product this * other (both acting on the same axis).
    AxisOperator compose(const AxisOperator& other) const;
    AxisOperator scaled(double s) const;

private:
    std::variant<Mat, SparseRowMat> op_;
};

/// A batch of tensors: column c of `data` holds one row-major tensor of
/// the given shape.
///
/// apply_axis writes op (or op^T when `transpose`) applied along `axis` of
/// every tensor in the batch into `out`, resizing it. The production kernel
/// runs independent fibers blocks under OpenMP and uses BLAS-3 style
/// products; apply_axis_reference is the plain serial loop kept as the
/// oracle for it.
void apply_axis(const AxisOperator& op, bool transpose, std::span<const std::size_t> shape,
                std::size_t axis, const Mat& data, Mat& out);

void apply_axis_reference(const AxisOperator& op, bool transpose, std::span<const std::size_t> shape,
                          std::size_t axis, const Mat& data, Mat& out);

/// Shape after replacing extent `axis` by n.
std::vector<std::size_t> reshaped(std::span<const std::size_t> shape, std::size_t axis, std::size_t n);

/// Pairwise (tree) sum; the association order depends only on the length.
double pairwise_sum(std::span<const double> v);
double pairwise_sum_squares(std::span<const double> v);
double pairwise_sum_squares(const Vec& v);

}  // namespace bwler
