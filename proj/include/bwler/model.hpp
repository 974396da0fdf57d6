#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "bwler/diff.hpp"
#include "bwler/grid.hpp"
#include "bwler/interp.hpp"
#include "bwler/types.hpp"

namespace bwler {

/// Memoized physical-domain derivative operators for one grid and
/// per-axis derivative configuration.
class DerivativeCache {
public:
    DerivativeCache(TensorGrid grid, std::vector<DiffOperator> config);

    const AxisOperator& get(std::size_t axis, std::size_t order) const;
    const TensorGrid& grid() const { return grid_; }
    const std::vector<DiffOperator>& config() const { return config_; }

private:
    TensorGrid grid_;
    std::vector<DiffOperator> config_;
    mutable std::map<std::pair<std::size_t, std::size_t>, AxisOperator> ops_;
    mutable std::mutex mu_;
};

/// Explicit barycentric model: the trainable parameters are the function
/// values at the tensor grid nodes.
class BwlerModel {
public:
    /// theta = 0, spectral derivatives on every axis.
    explicit BwlerModel(TensorGrid grid);
    BwlerModel(TensorGrid grid, std::vector<DiffOperator> deriv_config);

    const TensorGrid& grid() const { return grid_; }
    const std::vector<DiffOperator>& deriv_config() const { return cache_->config(); }
    const DerivativeCache& derivatives() const { return *cache_; }
    std::shared_ptr<const DerivativeCache> derivative_cache() const { return cache_; }

    const Vec& theta() const { return theta_; }
    /// Replaces the parameters; rejects wrong sizes and non-finite entries.
    void set_theta(const Vec& theta);

    /// Values at a batch of points (one point per row).
    std::vector<double> evaluate(const RowMat& points) const;

    /// Node values of the mixed derivative with the given per-axis orders.
    Vec derivative_values(std::span<const std::size_t> orders) const;

    /// Mixed derivative at a batch of points: derivative node values are
    /// interpolated with the same barycentric/trigonometric functionals.
    std::vector<double> differentiate(std::span<const std::size_t> orders, const RowMat& points) const;

private:
    TensorGrid grid_;
    std::shared_ptr<const DerivativeCache> cache_;
    Vec theta_;
};

using PointFunction = std::function<double(std::span<const double>)>;

/// theta_j <- source(x_j) at every node; the derivative configuration is kept.
BwlerModel warm_start(const BwlerModel& model, const PointFunction& source);
BwlerModel warm_start(const BwlerModel& model, const BwlerModel& source);

/// Node coordinates of a grid, one node per row.
RowMat grid_points(const TensorGrid& grid);

/// Checkpoint: one JSON header line (format, version, axes, derivative
/// configuration, parameter count) followed by one %.17g value per line.
void save_checkpoint(const BwlerModel& model, const std::filesystem::path& path);
BwlerModel load_checkpoint(const std::filesystem::path& path);

/// A set of query points together with the linear map from node tensors
/// to values at those points.
class PointSet {
public:
    /// Subset of grid nodes given by flat indices (evaluation is a gather).
    static PointSet nodes(const TensorGrid& grid, std::vector<std::size_t> flat_indices);
    static PointSet all_nodes(const TensorGrid& grid);
    /// Arbitrary points inside the domain (one per row).
    static PointSet scattered(const TensorGrid& grid, RowMat points);

    std::size_t size() const { return static_cast<std::size_t>(coords_.rows()); }
    const RowMat& coordinates() const { return coords_; }
    bool is_nodal() const { return nodal_; }
    const std::vector<std::size_t>& node_indices() const { return indices_; }

    /// out (M x r) = E * nodes (P x r).
    void evaluate(const Mat& nodes, Mat& out) const;
    /// out (P x r) = E^T * values (M x r).
    void evaluate_transpose(const Mat& values, Mat& out) const;

private:
    std::size_t grid_size_ = 0;
    std::vector<std::size_t> shape_;
    RowMat coords_;
    bool nodal_ = false;
    std::vector<std::size_t> indices_;
    // scattered: dense matrix when small enough, otherwise per-axis functionals
    bool dense_ = false;
    Mat matrix_;
    std::vector<std::vector<AxisFunctional>> functionals_;
};

/// Linear map theta -> (d^alpha u)(points), alpha a per-axis order tuple.
class FieldOperator {
public:
    FieldOperator(const BwlerModel& model, std::vector<std::size_t> orders,
                  std::shared_ptr<const PointSet> points);

    std::size_t rows() const { return points_->size(); }
    const PointSet& points() const { return *points_; }
    const std::vector<std::size_t>& orders() const { return orders_; }

    void apply(const Mat& theta, Mat& out) const;
    /// out += coeff * op^T * w  (out must already be P x r)
    void apply_transpose_add(const Mat& w, double coeff, Mat& out) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<std::size_t> orders_;
    std::vector<const AxisOperator*> axis_ops_;
    std::shared_ptr<const DerivativeCache> keep_alive_;
    std::shared_ptr<const PointSet> points_;
};

}  // namespace bwler
