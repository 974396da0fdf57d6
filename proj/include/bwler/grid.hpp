#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwler {

/// Raised when a query point falls outside an axis interval.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Basis { Chebyshev, Fourier };

std::string to_string(Basis basis);
Basis parse_basis(const std::string& name);

struct Interval {
    double a = -1.0;
    double b = 1.0;

    double length() const { return b - a; }
    bool operator==(const Interval&) const = default;
};

/// Canonical Chebyshev-Gauss-Lobatto nodes cos(j*pi/N), j = 0..N, with
/// the endpoints set to exactly +1 and -1.
std::vector<double> cgl_nodes(std::size_t n);

/// Barycentric weights (-1)^j / (1 + [j==0] + [j==N]) for the CGL nodes.
std::vector<double> cgl_bary_weights(std::size_t n);

/// Canonical equispaced periodic nodes 2*pi*j/N, j = 0..N-1.
std::vector<double> fourier_nodes(std::size_t n);

/// Diagonal of the population value Gram on the CGL nodes:
/// pi/(2N) at the endpoints and pi/N in the interior.
std::vector<double> clenshaw_curtis_weights(std::size_t n);

struct MappedPoint {
    double canonical;
    double scale;  // d(canonical)/d(physical)
};

/// One interpolation axis. Chebyshev axes hold n+1 nodes, Fourier axes
/// hold n nodes. Nodes are stored both in canonical and physical form.
class Grid1D {
public:
    Grid1D(Basis basis, std::size_t n, Interval interval);

    static Grid1D chebyshev(std::size_t n, Interval interval = {-1.0, 1.0}) {
        return {Basis::Chebyshev, n, interval};
    }
    static Grid1D fourier(std::size_t n, Interval interval = {0.0, 6.283185307179586}) {
        return {Basis::Fourier, n, interval};
    }

    Basis basis() const { return basis_; }
    std::size_t n() const { return n_; }
    std::size_t size() const { return canonical_.size(); }
    const Interval& interval() const { return interval_; }

    std::span<const double> canonical_nodes() const { return canonical_; }
    std::span<const double> nodes() const { return nodes_; }
    /// Empty for Fourier axes.
    std::span<const double> bary_weights() const { return bary_; }

    /// Canonical coordinate and derivative scale of a physical point.
    /// Chebyshev axes accept points within 1e-12*(b-a) of the interval;
    /// Fourier axes reduce the point modulo the period.
    MappedPoint map_point(double x) const;

    /// Factor applied once per derivative order when mapping canonical
    /// derivatives back to physical ones.
    double scale() const;

    bool operator==(const Grid1D& other) const {
        return basis_ == other.basis_ && n_ == other.n_ && interval_ == other.interval_;
    }

private:
    Basis basis_;
    std::size_t n_;
    Interval interval_;
    std::vector<double> canonical_;
    std::vector<double> nodes_;
    std::vector<double> bary_;
};

MappedPoint map_point(const Grid1D& grid, double x);

/// Ordered product of axes. Node values are stored row-major with the
/// last axis varying fastest.
class TensorGrid {
public:
    TensorGrid() = default;
    explicit TensorGrid(std::vector<Grid1D> axes);

    std::size_t dims() const { return axes_.size(); }
    const Grid1D& axis(std::size_t i) const { return axes_.at(i); }
    const std::vector<Grid1D>& axes() const { return axes_; }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return size_; }

    /// Flat (row-major) index of a multi-index.
    std::size_t flat_index(std::span<const std::size_t> idx) const;
    /// Multi-index of a flat index.
    std::vector<std::size_t> multi_index(std::size_t flat) const;
    /// Physical coordinates of the node with the given flat index.
    std::vector<double> node(std::size_t flat) const;

    /// Whether both grids span the same physical box.
    bool same_domain(const TensorGrid& other) const;

    bool operator==(const TensorGrid& other) const { return axes_ == other.axes_; }

private:
    std::vector<Grid1D> axes_;
    std::vector<std::size_t> shape_;
    std::size_t size_ = 0;
};

}  // namespace bwler
