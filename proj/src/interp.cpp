#include "bwler/interp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bwler/transforms.hpp"

namespace bwler {
namespace {

void require_finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("node values must be finite");
}

void require_size(const Grid1D& grid, std::span<const double> values) {
    if (values.size() != grid.size()) throw std::invalid_argument("node value count does not match grid");
}

double wrap_angle(double d) {
    const double two_pi = 2.0 * std::numbers::pi;
    d = std::fmod(d, two_pi);
    if (d > std::numbers::pi) d -= two_pi;
    if (d <= -std::numbers::pi) d += two_pi;
    return d;
}

// Periodic cardinal function of the balanced trigonometric interpolant at
// angular offset d from its node.
double periodic_cardinal(std::size_t n, double d) {
    const double half = 0.5 * d;
    const double nn = static_cast<double>(n);
    if (n % 2 == 0) return std::sin(nn * half) * std::cos(half) / (nn * std::sin(half));
    return std::sin(nn * half) / (nn * std::sin(half));
}

std::vector<Complex> fourier_coefficients(std::span<const double> values) {
    auto spec = fft(values).values;
    const double inv = 1.0 / static_cast<double>(values.size());
    for (auto& c : spec) c *= inv;
    return spec;
}

double fourier_sum(const std::vector<Complex>& coef, double t) {
    const std::size_t n = coef.size();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (n % 2 == 0 && k == n / 2) {
            acc += coef[k].real() * std::cos(0.5 * static_cast<double>(n) * t);
            continue;
        }
        const double freq = (2 * k < n) ? static_cast<double>(k)
                                        : static_cast<double>(k) - static_cast<double>(n);
        const Complex e{std::cos(freq * t), std::sin(freq * t)};
        acc += (coef[k] * e).real();
    }
    return acc;
}

}  // namespace

double bary_eval(const NodeValues1D& nv, double x) {
    const Grid1D& g = nv.grid;
    if (g.basis() != Basis::Chebyshev) throw std::invalid_argument("bary_eval: Chebyshev axis required");
    require_size(g, nv.values);
    require_finite(nv.values);
    const double t = g.map_point(x).canonical;
    const auto xj = g.canonical_nodes();
    const auto w = g.bary_weights();
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < xj.size(); ++j) {
        const double d = t - xj[j];
        if (std::abs(d) <= kNodeHitTolerance) return nv.values[j];
        const double c = w[j] / d;
        num += c * nv.values[j];
        den += c;
    }
    return num / den;
}

std::vector<double> bary_eval(const NodeValues1D& nv, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = bary_eval(nv, xs[i]);
    return out;
}

double fourier_eval(const NodeValues1D& nv, double x) {
    const Grid1D& g = nv.grid;
    if (g.basis() != Basis::Fourier) throw std::invalid_argument("fourier_eval: Fourier axis required");
    require_size(g, nv.values);
    require_finite(nv.values);
    return fourier_sum(fourier_coefficients(nv.values), g.map_point(x).canonical);
}

std::vector<double> fourier_eval(const NodeValues1D& nv, std::span<const double> xs) {
    const Grid1D& g = nv.grid;
    if (g.basis() != Basis::Fourier) throw std::invalid_argument("fourier_eval: Fourier axis required");
    require_size(g, nv.values);
    require_finite(nv.values);
    const auto coef = fourier_coefficients(nv.values);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fourier_sum(coef, g.map_point(xs[i]).canonical);
    return out;
}

AxisFunctional axis_functional(const Grid1D& grid, double x) {
    const double t = grid.map_point(x).canonical;
    const auto xj = grid.canonical_nodes();
    AxisFunctional f;
    f.weights.assign(xj.size(), 0.0);
    if (grid.basis() == Basis::Chebyshev) {
        const auto w = grid.bary_weights();
        double den = 0.0;
        for (std::size_t j = 0; j < xj.size(); ++j) {
            const double d = t - xj[j];
            if (std::abs(d) <= kNodeHitTolerance) {
                f.weights.assign(xj.size(), 0.0);
                f.weights[j] = 1.0;
                f.hit = static_cast<long>(j);
                return f;
            }
            f.weights[j] = w[j] / d;
            den += f.weights[j];
        }
        for (double& v : f.weights) v /= den;
        return f;
    }
    for (std::size_t j = 0; j < xj.size(); ++j) {
        const double d = wrap_angle(t - xj[j]);
        if (std::abs(d) <= kNodeHitTolerance) {
            f.weights.assign(xj.size(), 0.0);
            f.weights[j] = 1.0;
            f.hit = static_cast<long>(j);
            return f;
        }
        f.weights[j] = periodic_cardinal(xj.size(), d);
    }
    return f;
}

Mat evaluation_matrix(const Grid1D& grid, std::span<const double> xs) {
    Mat e(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto f = axis_functional(grid, xs[i]);
        for (std::size_t j = 0; j < f.weights.size(); ++j)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.weights[j];
    }
    return e;
}

namespace {

// Sum over the tensor of values * prod_d f_d, skipping axes with node hits.
double contract(const std::vector<AxisFunctional>& fs, const std::vector<std::size_t>& shape,
                const double* values, std::size_t axis, std::size_t offset) {
    if (axis == shape.size()) return values[offset];
    const std::size_t stride_next = offset * shape[axis];
    const auto& f = fs[axis];
    if (f.hit >= 0) return contract(fs, shape, values, axis + 1, stride_next + static_cast<std::size_t>(f.hit));
    double acc = 0.0;
    for (std::size_t j = 0; j < shape[axis]; ++j)
        acc += f.weights[j] * contract(fs, shape, values, axis + 1, stride_next + j);
    return acc;
}

}  // namespace

double tensor_eval(const NodeValues& nv, std::span<const double> point) {
    const TensorGrid& g = nv.grid;
    if (point.size() != g.dims()) throw std::invalid_argument("tensor_eval: point dimension mismatch");
    if (nv.values.size() != g.size()) throw std::invalid_argument("tensor_eval: value count mismatch");
    std::vector<AxisFunctional> fs;
    fs.reserve(g.dims());
    for (std::size_t d = 0; d < g.dims(); ++d) fs.push_back(axis_functional(g.axis(d), point[d]));
    return contract(fs, g.shape(), nv.values.data(), 0, 0);
}

std::vector<double> tensor_eval(const NodeValues& nv, const RowMat& points) {
    const TensorGrid& g = nv.grid;
    if (static_cast<std::size_t>(points.cols()) != g.dims())
        throw std::invalid_argument("tensor_eval: point dimension mismatch");
    require_finite(nv.values);
    std::vector<double> out(static_cast<std::size_t>(points.rows()));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        out[static_cast<std::size_t>(i)] =
            tensor_eval(nv, std::span<const double>(points.row(i).data(), g.dims()));
    return out;
}

Mat tensor_eval_product(const TensorGrid& grid, const Mat& values,
                        const std::vector<std::vector<double>>& axis_queries) {
    if (axis_queries.size() != grid.dims()) throw std::invalid_argument("tensor_eval_product: one query list per axis");
    std::vector<std::size_t> shape = grid.shape();
    Mat cur = values, next;
    for (std::size_t d = 0; d < grid.dims(); ++d) {
        const AxisOperator e(evaluation_matrix(grid.axis(d), axis_queries[d]));
        apply_axis(e, false, shape, d, cur, next);
        shape[d] = axis_queries[d].size();
        cur.swap(next);
    }
    return cur;
}

}  // namespace bwler
