#include "bwler/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bwler {

std::string to_string(Basis basis) {
    return basis == Basis::Chebyshev ? "chebyshev" : "fourier";
}

Basis parse_basis(const std::string& name) {
    if (name == "chebyshev" || name == "cheb") return Basis::Chebyshev;
    if (name == "fourier") return Basis::Fourier;
    throw std::invalid_argument("unknown basis '" + name + "'");
}

std::vector<double> cgl_nodes(std::size_t n) {
    if (n == 0) throw std::invalid_argument("cgl_nodes: N must be >= 1");
    std::vector<double> x(n + 1);
    const double pi = std::numbers::pi;
    for (std::size_t j = 0; j <= n; ++j) {
        // cos(j*pi/N) evaluated as sin(pi*(N-2j)/(2N)) is symmetric about 0
        // and returns an exact zero at the midpoint for even N.
        x[j] = std::sin(pi * (static_cast<double>(n) - 2.0 * static_cast<double>(j)) /
                        (2.0 * static_cast<double>(n)));
    }
    x.front() = 1.0;
    x.back() = -1.0;
    return x;
}

std::vector<double> cgl_bary_weights(std::size_t n) {
    if (n == 0) throw std::invalid_argument("cgl_bary_weights: N must be >= 1");
    std::vector<double> w(n + 1);
    for (std::size_t j = 0; j <= n; ++j) w[j] = (j % 2 == 0) ? 1.0 : -1.0;
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

std::vector<double> fourier_nodes(std::size_t n) {
    if (n < 2) throw std::invalid_argument("fourier_nodes: N must be >= 2");
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j)
        x[j] = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    return x;
}

std::vector<double> clenshaw_curtis_weights(std::size_t n) {
    if (n == 0) throw std::invalid_argument("clenshaw_curtis_weights: N must be >= 1");
    const double h = std::numbers::pi / static_cast<double>(n);
    std::vector<double> w(n + 1, h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

Grid1D::Grid1D(Basis basis, std::size_t n, Interval interval)
    : basis_(basis), n_(n), interval_(interval) {
    if (!(interval.a < interval.b) || !std::isfinite(interval.a) || !std::isfinite(interval.b))
        throw std::invalid_argument("Grid1D: interval must satisfy a < b");
    if (basis == Basis::Chebyshev) {
        canonical_ = cgl_nodes(n);
        bary_ = cgl_bary_weights(n);
        nodes_.resize(canonical_.size());
        for (std::size_t j = 0; j < canonical_.size(); ++j)
            nodes_[j] = interval.a + 0.5 * (canonical_[j] + 1.0) * interval.length();
        nodes_.front() = interval.b;
        nodes_.back() = interval.a;
    } else {
        canonical_ = fourier_nodes(n);
        nodes_.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            nodes_[j] = interval.a + interval.length() * static_cast<double>(j) / static_cast<double>(n);
    }
}

double Grid1D::scale() const {
    return basis_ == Basis::Chebyshev ? 2.0 / interval_.length()
                                      : 2.0 * std::numbers::pi / interval_.length();
}

MappedPoint Grid1D::map_point(double x) const {
    if (!std::isfinite(x)) throw DomainError("map_point: non-finite coordinate");
    const double len = interval_.length();
    if (basis_ == Basis::Chebyshev) {
        const double slack = 1e-12 * len;
        if (x < interval_.a - slack || x > interval_.b + slack)
            throw DomainError("map_point: " + std::to_string(x) + " outside [" +
                              std::to_string(interval_.a) + ", " + std::to_string(interval_.b) + "]");
        double t = 2.0 * (x - interval_.a) / len - 1.0;
        t = std::clamp(t, -1.0, 1.0);
        return {t, scale()};
    }
    double t = 2.0 * std::numbers::pi * (x - interval_.a) / len;
    const double period = 2.0 * std::numbers::pi;
    t = std::fmod(t, period);
    if (t < 0.0) t += period;
    if (t >= period) t -= period;
    return {t, scale()};
}

MappedPoint map_point(const Grid1D& grid, double x) { return grid.map_point(x); }

TensorGrid::TensorGrid(std::vector<Grid1D> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw std::invalid_argument("TensorGrid: at least one axis required");
    size_ = 1;
    for (const auto& ax : axes_) {
        shape_.push_back(ax.size());
        size_ *= ax.size();
    }
}

std::size_t TensorGrid::flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != dims()) throw std::invalid_argument("flat_index: dimension mismatch");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dims(); ++d) flat = flat * shape_[d] + idx[d];
    return flat;
}

std::vector<std::size_t> TensorGrid::multi_index(std::size_t flat) const {
    std::vector<std::size_t> idx(dims());
    for (std::size_t d = dims(); d-- > 0;) {
        idx[d] = flat % shape_[d];
        flat /= shape_[d];
    }
    return idx;
}

std::vector<double> TensorGrid::node(std::size_t flat) const {
    const auto idx = multi_index(flat);
    std::vector<double> x(dims());
    for (std::size_t d = 0; d < dims(); ++d) x[d] = axes_[d].nodes()[idx[d]];
    return x;
}

bool TensorGrid::same_domain(const TensorGrid& other) const {
    if (dims() != other.dims()) return false;
    for (std::size_t d = 0; d < dims(); ++d)
        if (!(axes_[d].interval() == other.axes_[d].interval())) return false;
    return true;
}

}  // namespace bwler
