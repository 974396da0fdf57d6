#include "bwler/diff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "bwler/transforms.hpp"

namespace bwler {

std::vector<double> cheb_fft_derivative(std::span<const double> values) {
    if (values.size() < 3) throw std::invalid_argument("cheb_fft_derivative: N must be >= 2");
    const std::size_t n = values.size() - 1;
    const std::size_t len = 2 * n;
    const auto ext = even_extension(values);
    SpectrumBuffer spec = fft(std::span<const double>(ext));

    // Chebyshev coefficients of the data, DCT-I normalization
    std::vector<double> a(n + 1);
    for (std::size_t k = 0; k <= n; ++k) a[k] = spec.values[k].real() / static_cast<double>(n);
    a[0] *= 0.5;
    a[n] *= 0.5;

    for (std::size_t k = 0; k < len; ++k) {
        double keff;
        if (k < n)
            keff = static_cast<double>(k);
        else if (k == n)
            keff = 0.0;  // Nyquist mode carries no odd-derivative content
        else
            keff = static_cast<double>(k) - static_cast<double>(len);
        spec.values[k] *= Complex(0.0, keff);
    }
    const auto w = ifft(spec);

    std::vector<double> d(n + 1);
    const double pi = std::numbers::pi;
    for (std::size_t j = 1; j < n; ++j) {
        // sqrt(1 - x_j^2) = sin(j pi / N)
        const double s = std::sin(pi * static_cast<double>(j) / static_cast<double>(n));
        d[j] = -w[j].real() / s;
    }
    double d0 = 0.0, dn = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double k2 = static_cast<double>(k) * static_cast<double>(k);
        d0 += k2 * a[k];
        dn += (k % 2 == 0 ? -1.0 : 1.0) * k2 * a[k];
    }
    d[0] = d0;
    d[n] = dn;
    return d;
}

Mat cheb_fft_diff_matrix(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, Mat> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(n); it != cache.end()) return it->second;
    }
    if (n < 2) throw std::invalid_argument("cheb_fft_diff_matrix: N must be >= 2");
    Mat d(n + 1, n + 1);
    std::vector<double> e(n + 1, 0.0);
    for (std::size_t j = 0; j <= n; ++j) {
        e[j] = 1.0;
        const auto col = cheb_fft_derivative(e);
        for (std::size_t i = 0; i <= n; ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        e[j] = 0.0;
    }
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(n, d);
    return d;
}

Mat fourier_diff_matrix(std::size_t n) {
    if (n < 2) throw std::invalid_argument("fourier_diff_matrix: N must be >= 2");
    Mat d = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const long diff = static_cast<long>(i) - static_cast<long>(j);
            const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
            const double ang = pi * static_cast<double>(diff) / static_cast<double>(n);
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.5 * sign * std::cos(ang) / std::sin(ang);
        }
    return d;
}

Mat fornberg_weights(std::span<const double> nodes, double z, std::size_t max_order) {
    const std::size_t n = nodes.size();
    if (n < max_order + 1) throw std::invalid_argument("fornberg_weights: stencil smaller than order + 1");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (nodes[i] == nodes[j]) throw std::invalid_argument("fornberg_weights: repeated stencil nodes");

    const std::size_t m = max_order;
    Mat c = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + 1));
    double c1 = 1.0;
    double c4 = nodes[0] - z;
    c(0, 0) = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - z;
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < i; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) {
                    const auto kk = static_cast<Eigen::Index>(k);
                    c(ii, kk) = c1 * (static_cast<double>(k) * c(ii - 1, kk - 1) - c5 * c(ii - 1, kk)) / c2;
                }
                c(ii, 0) = -c1 * c5 * c(ii - 1, 0) / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) {
                const auto kk = static_cast<Eigen::Index>(k);
                c(jj, kk) = (c4 * c(jj, kk) - static_cast<double>(k) * c(jj, kk - 1)) / c3;
            }
            c(jj, 0) = c4 * c(jj, 0) / c3;
        }
        c1 = c2;
    }
    return c.transpose();
}

SparseRowMat BandedMatrix::to_sparse() const {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t d = 0; d < offsets.size(); ++d)
        for (std::size_t i = 0; i < n; ++i) {
            const double v = diagonals[d][i];
            if (v == 0.0) continue;
            long j = static_cast<long>(i) + offsets[d];
            if (periodic) j = ((j % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
            trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        }
    SparseRowMat s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

Vec BandedMatrix::apply(const Vec& u) const { return to_sparse() * u; }

std::size_t BandedMatrix::max_row_nonzeros() const {
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cnt = 0;
        for (std::size_t d = 0; d < offsets.size(); ++d)
            if (diagonals[d][i] != 0.0) ++cnt;
        best = std::max(best, cnt);
    }
    return best;
}

BandedMatrix fd_diff_matrix(const Grid1D& grid, std::size_t order, std::size_t half_bandwidth) {
    if (order == 0) throw std::invalid_argument("fd_diff_matrix: order must be >= 1");
    if (2 * half_bandwidth + 1 < order + 1)
        throw std::invalid_argument("fd_diff_matrix: half-bandwidth too small for derivative order");
    const auto x = grid.canonical_nodes();
    const std::size_t n = x.size();
    BandedMatrix band;
    band.n = n;
    std::map<int, std::vector<double>> diags;
    auto put = [&](std::size_t i, int off, double v) {
        auto& dg = diags[off];
        if (dg.empty()) dg.assign(n, 0.0);
        dg[i] += v;
    };

    if (grid.basis() == Basis::Fourier) {
        band.periodic = true;
        const std::size_t k = std::min(half_bandwidth, (n - 1) / 2);
        const std::size_t width = 2 * k + 1;
        if (width < order + 1)
            throw std::invalid_argument("fd_diff_matrix: grid too small for derivative order");
        const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
        std::vector<double> local(width);
        for (std::size_t s = 0; s < width; ++s)
            local[s] = (static_cast<double>(s) - static_cast<double>(k)) * h;
        const Mat w = fornberg_weights(local, 0.0, order);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < width; ++s)
                put(i, static_cast<int>(s) - static_cast<int>(k),
                    w(static_cast<Eigen::Index>(order), static_cast<Eigen::Index>(s)));
    } else {
        const std::size_t width = std::min(2 * half_bandwidth + 1, n);
        if (width < order + 1)
            throw std::invalid_argument("fd_diff_matrix: grid too small for derivative order");
        std::vector<double> local(width);
        for (std::size_t i = 0; i < n; ++i) {
            const long lo_raw = static_cast<long>(i) - static_cast<long>(half_bandwidth);
            const std::size_t start = static_cast<std::size_t>(
                std::clamp(lo_raw, 0L, static_cast<long>(n - width)));
            for (std::size_t s = 0; s < width; ++s) local[s] = x[start + s];
            const Mat w = fornberg_weights(local, x[i], order);
            for (std::size_t s = 0; s < width; ++s)
                put(i, static_cast<int>(start + s) - static_cast<int>(i),
                    w(static_cast<Eigen::Index>(order), static_cast<Eigen::Index>(s)));
        }
    }
    for (auto& [off, dg] : diags) {
        band.offsets.push_back(off);
        band.diagonals.push_back(std::move(dg));
    }
    return band;
}

DiffOperator DiffOperator::spectral_for(const Grid1D& grid) {
    return {grid.basis() == Basis::Chebyshev ? DiffMethod::ChebSpectral : DiffMethod::FourierMatrix, 1};
}

std::string to_string(const DiffOperator& op) {
    if (op.method == DiffMethod::FiniteDifference) return "fd:" + std::to_string(op.half_bandwidth);
    return "spectral";
}

DiffOperator parse_diff_operator(const std::string& text, const Grid1D& grid) {
    if (text == "spectral") return DiffOperator::spectral_for(grid);
    if (text.rfind("fd:", 0) == 0) {
        const long k = std::stol(text.substr(3));
        if (k < 1) throw std::invalid_argument("finite-difference half-bandwidth must be >= 1");
        return DiffOperator::finite_difference(static_cast<std::size_t>(k));
    }
    throw std::invalid_argument("unknown derivative method '" + text + "' (expected spectral or fd:K)");
}

AxisOperator canonical_derivative(const Grid1D& grid, const DiffOperator& method, std::size_t order) {
    if (order == 0) return AxisOperator(Mat(Mat::Identity(static_cast<Eigen::Index>(grid.size()),
                                                          static_cast<Eigen::Index>(grid.size()))));
    switch (method.method) {
        case DiffMethod::ChebSpectral: {
            if (grid.basis() != Basis::Chebyshev)
                throw std::invalid_argument("Chebyshev spectral derivative requires a Chebyshev axis");
            const Mat d = cheb_fft_diff_matrix(grid.n());
            Mat acc = d;
            for (std::size_t m = 1; m < order; ++m) acc = (d * acc).eval();
            return AxisOperator(std::move(acc));
        }
        case DiffMethod::FourierMatrix: {
            if (grid.basis() != Basis::Fourier)
                throw std::invalid_argument("Fourier differentiation matrix requires a Fourier axis");
            const Mat d = fourier_diff_matrix(grid.n());
            Mat acc = d;
            for (std::size_t m = 1; m < order; ++m) acc = (d * acc).eval();
            return AxisOperator(std::move(acc));
        }
        case DiffMethod::FiniteDifference:
            return AxisOperator(fd_diff_matrix(grid, order, method.half_bandwidth).to_sparse());
    }
    throw std::logic_error("unreachable");
}

AxisOperator physical_derivative(const Grid1D& grid, const DiffOperator& method, std::size_t order) {
    return canonical_derivative(grid, method, order).scaled(std::pow(grid.scale(), static_cast<double>(order)));
}

Mat axis_derivative(const TensorGrid& grid, const Mat& values, std::size_t axis, std::size_t order,
                    const DiffOperator& method) {
    if (axis >= grid.dims()) throw std::invalid_argument("axis_derivative: invalid axis");
    const AxisOperator op = physical_derivative(grid.axis(axis), method, order);
    Mat out;
    apply_axis(op, false, grid.shape(), axis, values, out);
    return out;
}

}  // namespace bwler
