#include "bwler/kernels.hpp"

#include <omp.h>

#include <stdexcept>

namespace bwler {

Eigen::Index AxisOperator::rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, op_);
}

Eigen::Index AxisOperator::cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, op_);
}

Mat AxisOperator::to_dense() const {
    if (is_sparse()) return Mat(sparse());
    return dense();
}

AxisOperator AxisOperator::compose(const AxisOperator& other) const {
    if (cols() != other.rows()) throw std::invalid_argument("AxisOperator::compose: size mismatch");
    if (is_sparse() && other.is_sparse()) return AxisOperator(SparseRowMat(sparse() * other.sparse()));
    return AxisOperator(Mat(to_dense() * other.to_dense()));
}

AxisOperator AxisOperator::scaled(double s) const {
    if (is_sparse()) return AxisOperator(SparseRowMat(s * sparse()));
    return AxisOperator(Mat(s * dense()));
}

std::vector<std::size_t> reshaped(std::span<const std::size_t> shape, std::size_t axis, std::size_t n) {
    std::vector<std::size_t> s(shape.begin(), shape.end());
    s.at(axis) = n;
    return s;
}

namespace {

struct AxisLayout {
    Eigen::Index n_in;
    Eigen::Index n_out;
    Eigen::Index pre;   // blocks per batch, times the batch size
    Eigen::Index post;  // stride of the axis
    Eigen::Index size_in;
    Eigen::Index size_out;
};

AxisLayout layout(const AxisOperator& op, bool transpose, std::span<const std::size_t> shape,
                  std::size_t axis, const Mat& data) {
    if (axis >= shape.size()) throw std::invalid_argument("apply_axis: axis out of range");
    AxisLayout l{};
    l.n_in = transpose ? op.rows() : op.cols();
    l.n_out = transpose ? op.cols() : op.rows();
    if (static_cast<Eigen::Index>(shape[axis]) != l.n_in)
        throw std::invalid_argument("apply_axis: operator does not match axis extent");
    Eigen::Index pre = 1, post = 1;
    for (std::size_t d = 0; d < axis; ++d) pre *= static_cast<Eigen::Index>(shape[d]);
    for (std::size_t d = axis + 1; d < shape.size(); ++d) post *= static_cast<Eigen::Index>(shape[d]);
    l.size_in = pre * l.n_in * post;
    l.size_out = pre * l.n_out * post;
    if (data.rows() != l.size_in) throw std::invalid_argument("apply_axis: data does not match shape");
    l.pre = pre * data.cols();
    l.post = post;
    return l;
}

template <typename Op>
void run_blocks(const Op& a, const AxisLayout& l, const double* x, double* y) {
    using CMap = Eigen::Map<const Mat>;
    using MMap = Eigen::Map<Mat>;
    if (l.post == 1) {
        // every fiber is contiguous: one product covers the whole batch
        CMap xin(x, l.n_in, l.pre);
        MMap yout(y, l.n_out, l.pre);
        const int threads = omp_get_max_threads();
        if (threads <= 1 || l.pre < 2 * threads) {
            yout.noalias() = a * xin;
            return;
        }
#pragma omp parallel
        {
            const Eigen::Index nt = omp_get_num_threads();
            const Eigen::Index t = omp_get_thread_num();
            const Eigen::Index lo = l.pre * t / nt, hi = l.pre * (t + 1) / nt;
            if (hi > lo) yout.middleCols(lo, hi - lo).noalias() = a * xin.middleCols(lo, hi - lo);
        }
        return;
    }
    // row-major (n x post) block == column-major (post x n) block
    if (l.pre == 1) {
        CMap xin(x, l.post, l.n_in);
        MMap yout(y, l.post, l.n_out);
        const int threads = omp_get_max_threads();
        if (threads <= 1 || l.post < 2 * threads) {
            yout.noalias() = xin * a.transpose();
            return;
        }
#pragma omp parallel
        {
            const Eigen::Index nt = omp_get_num_threads();
            const Eigen::Index t = omp_get_thread_num();
            const Eigen::Index lo = l.post * t / nt, hi = l.post * (t + 1) / nt;
            if (hi > lo) yout.middleRows(lo, hi - lo).noalias() = xin.middleRows(lo, hi - lo) * a.transpose();
        }
        return;
    }
#pragma omp parallel for schedule(static) if (l.pre > 1)
    for (Eigen::Index b = 0; b < l.pre; ++b) {
        CMap xin(x + b * l.n_in * l.post, l.post, l.n_in);
        MMap yout(y + b * l.n_out * l.post, l.post, l.n_out);
        yout.noalias() = xin * a.transpose();
    }
}

}  // namespace

void apply_axis(const AxisOperator& op, bool transpose, std::span<const std::size_t> shape,
                std::size_t axis, const Mat& data, Mat& out) {
    const AxisLayout l = layout(op, transpose, shape, axis, data);
    if (&out == &data) throw std::invalid_argument("apply_axis: in-place application is not supported");
    out.resize(l.size_out, data.cols());
    if (op.is_sparse()) {
        if (transpose)
            run_blocks(op.sparse().transpose(), l, data.data(), out.data());
        else
            run_blocks(op.sparse(), l, data.data(), out.data());
    } else {
        if (transpose)
            run_blocks(op.dense().transpose(), l, data.data(), out.data());
        else
            run_blocks(op.dense(), l, data.data(), out.data());
    }
}

void apply_axis_reference(const AxisOperator& op, bool transpose, std::span<const std::size_t> shape,
                          std::size_t axis, const Mat& data, Mat& out) {
    const AxisLayout l = layout(op, transpose, shape, axis, data);
    const Mat a = op.to_dense();
    out.setZero(l.size_out, data.cols());
    const double* x = data.data();
    double* y = out.data();
    for (Eigen::Index b = 0; b < l.pre; ++b)
        for (Eigen::Index i = 0; i < l.n_out; ++i)
            for (Eigen::Index j = 0; j < l.n_in; ++j) {
                const double aij = transpose ? a(j, i) : a(i, j);
                if (aij == 0.0) continue;
                for (Eigen::Index s = 0; s < l.post; ++s)
                    y[(b * l.n_out + i) * l.post + s] += aij * x[(b * l.n_in + j) * l.post + s];
            }
}

namespace {

template <typename F>
double pairwise(std::size_t lo, std::size_t hi, const F& term) {
    const std::size_t n = hi - lo;
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise(lo, mid, term) + pairwise(mid, hi, term);
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
    return pairwise(0, v.size(), [&](std::size_t i) { return v[i]; });
}

double pairwise_sum_squares(std::span<const double> v) {
    return pairwise(0, v.size(), [&](std::size_t i) { return v[i] * v[i]; });
}

double pairwise_sum_squares(const Vec& v) {
    return pairwise_sum_squares(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace bwler
