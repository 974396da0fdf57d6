#include "bwler/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bwler {

DerivativeCache::DerivativeCache(TensorGrid grid, std::vector<DiffOperator> config)
    : grid_(std::move(grid)), config_(std::move(config)) {
    if (config_.size() != grid_.dims())
        throw std::invalid_argument("derivative configuration needs one entry per axis");
    for (std::size_t d = 0; d < grid_.dims(); ++d) {
        const auto& op = config_[d];
        const Basis b = grid_.axis(d).basis();
        if (op.method == DiffMethod::ChebSpectral && b != Basis::Chebyshev)
            throw std::invalid_argument("Chebyshev spectral derivative on a non-Chebyshev axis");
        if (op.method == DiffMethod::FourierMatrix && b != Basis::Fourier)
            throw std::invalid_argument("Fourier derivative matrix on a non-Fourier axis");
    }
}

const AxisOperator& DerivativeCache::get(std::size_t axis, std::size_t order) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_pair(axis, order);
    if (auto it = ops_.find(key); it != ops_.end()) return it->second;
    auto [it, inserted] = ops_.emplace(key, physical_derivative(grid_.axis(axis), config_.at(axis), order));
    return it->second;
}

namespace {

std::vector<DiffOperator> default_config(const TensorGrid& grid) {
    std::vector<DiffOperator> cfg;
    for (const auto& ax : grid.axes()) cfg.push_back(DiffOperator::spectral_for(ax));
    return cfg;
}

}  // namespace

BwlerModel::BwlerModel(TensorGrid grid) : BwlerModel(grid, default_config(grid)) {}

BwlerModel::BwlerModel(TensorGrid grid, std::vector<DiffOperator> deriv_config)
    : grid_(grid),
      cache_(std::make_shared<const DerivativeCache>(std::move(grid), std::move(deriv_config))),
      theta_(Vec::Zero(static_cast<Eigen::Index>(grid_.size()))) {}

void BwlerModel::set_theta(const Vec& theta) {
    if (theta.size() != theta_.size()) throw std::invalid_argument("set_theta: size mismatch");
    if (!theta.allFinite()) throw NumericalError("set_theta: non-finite parameters");
    theta_ = theta;
}

std::vector<double> BwlerModel::evaluate(const RowMat& points) const {
    return tensor_eval(NodeValues{grid_, std::span<const double>(theta_.data(), grid_.size())}, points);
}

Vec BwlerModel::derivative_values(std::span<const std::size_t> orders) const {
    if (orders.size() != grid_.dims()) throw std::invalid_argument("derivative orders: one per axis");
    Mat cur = theta_, next;
    for (std::size_t d = 0; d < grid_.dims(); ++d) {
        if (orders[d] == 0) continue;
        apply_axis(cache_->get(d, orders[d]), false, grid_.shape(), d, cur, next);
        cur.swap(next);
    }
    return cur.col(0);
}

std::vector<double> BwlerModel::differentiate(std::span<const std::size_t> orders, const RowMat& points) const {
    const Vec dv = derivative_values(orders);
    return tensor_eval(NodeValues{grid_, std::span<const double>(dv.data(), grid_.size())}, points);
}

RowMat grid_points(const TensorGrid& grid) {
    RowMat pts(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(grid.dims()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.node(i);
        for (std::size_t d = 0; d < grid.dims(); ++d)
            pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = x[d];
    }
    return pts;
}

BwlerModel warm_start(const BwlerModel& model, const PointFunction& source) {
    BwlerModel out = model;
    const TensorGrid& g = model.grid();
    Vec theta(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.node(i);
        const double v = source(x);
        if (!std::isfinite(v)) throw NumericalError("warm_start: source returned a non-finite value");
        theta(static_cast<Eigen::Index>(i)) = v;
    }
    out.set_theta(theta);
    return out;
}

BwlerModel warm_start(const BwlerModel& model, const BwlerModel& source) {
    if (!model.grid().same_domain(source.grid())) throw DomainError("warm_start: source covers a different domain");
    BwlerModel out = model;
    if (model.grid() == source.grid()) {
        out.set_theta(source.theta());
        return out;
    }
    const auto vals = source.evaluate(grid_points(model.grid()));
    out.set_theta(Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    return out;
}

void save_checkpoint(const BwlerModel& model, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format"] = "bwler-checkpoint";
    header["version"] = 1;
    nlohmann::json axes = nlohmann::json::array();
    for (std::size_t d = 0; d < model.grid().dims(); ++d) {
        const auto& ax = model.grid().axis(d);
        axes.push_back({{"basis", to_string(ax.basis())},
                        {"n", ax.n()},
                        {"interval", {ax.interval().a, ax.interval().b}},
                        {"deriv", to_string(model.deriv_config()[d])}});
    }
    header["axes"] = axes;
    header["size"] = model.grid().size();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
    os << header.dump() << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < model.theta().size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", model.theta()(i));
        os << buf;
    }
}

BwlerModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
    std::string line;
    std::getline(is, line);
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "bwler-checkpoint") throw std::runtime_error("not a bwler checkpoint");
    if (header.value("version", 0) != 1) throw std::runtime_error("unsupported checkpoint version");
    std::vector<Grid1D> axes;
    std::vector<std::string> deriv_names;
    for (const auto& ax : header.at("axes")) {
        const auto iv = ax.at("interval");
        axes.emplace_back(parse_basis(ax.at("basis").get<std::string>()), ax.at("n").get<std::size_t>(),
                          Interval{iv.at(0).get<double>(), iv.at(1).get<double>()});
        deriv_names.push_back(ax.at("deriv").get<std::string>());
    }
    TensorGrid grid(axes);
    std::vector<DiffOperator> cfg;
    for (std::size_t d = 0; d < grid.dims(); ++d) cfg.push_back(parse_diff_operator(deriv_names[d], grid.axis(d)));
    BwlerModel model(grid, cfg);
    const auto size = header.at("size").get<std::size_t>();
    if (size != grid.size()) throw std::runtime_error("checkpoint size does not match its grid");
    Vec theta(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("checkpoint truncated");
        theta(static_cast<Eigen::Index>(i)) = std::stod(line);
    }
    model.set_theta(theta);
    return model;
}

PointSet PointSet::nodes(const TensorGrid& grid, std::vector<std::size_t> flat_indices) {
    PointSet ps;
    ps.grid_size_ = grid.size();
    ps.shape_ = grid.shape();
    ps.nodal_ = true;
    ps.coords_.resize(static_cast<Eigen::Index>(flat_indices.size()), static_cast<Eigen::Index>(grid.dims()));
    for (std::size_t i = 0; i < flat_indices.size(); ++i) {
        if (flat_indices[i] >= grid.size()) throw std::invalid_argument("PointSet::nodes: index out of range");
        const auto x = grid.node(flat_indices[i]);
        for (std::size_t d = 0; d < grid.dims(); ++d)
            ps.coords_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = x[d];
    }
    ps.indices_ = std::move(flat_indices);
    return ps;
}

PointSet PointSet::all_nodes(const TensorGrid& grid) {
    std::vector<std::size_t> idx(grid.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return nodes(grid, std::move(idx));
}

namespace {

constexpr double kDenseEvalLimit = 4e6;

template <typename F>
void for_each_term(const std::vector<AxisFunctional>& fs, const std::vector<std::size_t>& shape,
                   std::size_t axis, std::size_t offset, double weight, const F& f) {
    if (axis == shape.size()) {
        f(offset, weight);
        return;
    }
    const std::size_t base = offset * shape[axis];
    const auto& fa = fs[axis];
    if (fa.hit >= 0) {
        for_each_term(fs, shape, axis + 1, base + static_cast<std::size_t>(fa.hit), weight, f);
        return;
    }
    for (std::size_t j = 0; j < shape[axis]; ++j)
        if (fa.weights[j] != 0.0) for_each_term(fs, shape, axis + 1, base + j, weight * fa.weights[j], f);
}

}  // namespace

PointSet PointSet::scattered(const TensorGrid& grid, RowMat points) {
    if (static_cast<std::size_t>(points.cols()) != grid.dims())
        throw std::invalid_argument("PointSet::scattered: point dimension mismatch");
    PointSet ps;
    ps.grid_size_ = grid.size();
    ps.shape_ = grid.shape();
    ps.coords_ = std::move(points);
    const auto m = static_cast<std::size_t>(ps.coords_.rows());
    ps.functionals_.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t d = 0; d < grid.dims(); ++d)
            ps.functionals_[i].push_back(
                axis_functional(grid.axis(d), ps.coords_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d))));
    if (static_cast<double>(m) * static_cast<double>(grid.size()) <= kDenseEvalLimit) {
        ps.dense_ = true;
        ps.matrix_ = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < m; ++i)
            for_each_term(ps.functionals_[i], ps.shape_, 0, 0, 1.0, [&](std::size_t flat, double w) {
                ps.matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(flat)) += w;
            });
        ps.functionals_.clear();
    }
    return ps;
}

void PointSet::evaluate(const Mat& nodes, Mat& out) const {
    if (static_cast<std::size_t>(nodes.rows()) != grid_size_) throw std::invalid_argument("PointSet::evaluate: size mismatch");
    const auto m = static_cast<Eigen::Index>(size());
    if (nodal_) {
        out.resize(m, nodes.cols());
        for (Eigen::Index i = 0; i < m; ++i) out.row(i) = nodes.row(static_cast<Eigen::Index>(indices_[static_cast<std::size_t>(i)]));
        return;
    }
    if (dense_) {
        out.noalias() = matrix_ * nodes;
        return;
    }
    out.setZero(m, nodes.cols());
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < m; ++i)
        for_each_term(functionals_[static_cast<std::size_t>(i)], shape_, 0, 0, 1.0, [&](std::size_t flat, double w) {
            out.row(i) += w * nodes.row(static_cast<Eigen::Index>(flat));
        });
}

void PointSet::evaluate_transpose(const Mat& values, Mat& out) const {
    if (values.rows() != static_cast<Eigen::Index>(size()))
        throw std::invalid_argument("PointSet::evaluate_transpose: size mismatch");
    const auto p = static_cast<Eigen::Index>(grid_size_);
    if (dense_) {
        out.noalias() = matrix_.transpose() * values;
        return;
    }
    out.setZero(p, values.cols());
    if (nodal_) {
        for (std::size_t i = 0; i < indices_.size(); ++i)
            out.row(static_cast<Eigen::Index>(indices_[i])) += values.row(static_cast<Eigen::Index>(i));
        return;
    }
    for (std::size_t i = 0; i < functionals_.size(); ++i)
        for_each_term(functionals_[i], shape_, 0, 0, 1.0, [&](std::size_t flat, double w) {
            out.row(static_cast<Eigen::Index>(flat)) += w * values.row(static_cast<Eigen::Index>(i));
        });
}

FieldOperator::FieldOperator(const BwlerModel& model, std::vector<std::size_t> orders,
                             std::shared_ptr<const PointSet> points)
    : shape_(model.grid().shape()),
      orders_(std::move(orders)),
      keep_alive_(model.derivative_cache()),
      points_(std::move(points)) {
    if (orders_.size() != model.grid().dims()) throw std::invalid_argument("FieldOperator: one order per axis");
    axis_ops_.resize(orders_.size(), nullptr);
    for (std::size_t d = 0; d < orders_.size(); ++d)
        if (orders_[d] > 0) axis_ops_[d] = &keep_alive_->get(d, orders_[d]);
}

void FieldOperator::apply(const Mat& theta, Mat& out) const {
    const Mat* cur = &theta;
    Mat a, b;
    for (std::size_t d = 0; d < axis_ops_.size(); ++d) {
        if (!axis_ops_[d]) continue;
        Mat& dst = (cur == &a) ? b : a;
        apply_axis(*axis_ops_[d], false, shape_, d, *cur, dst);
        cur = &dst;
    }
    points_->evaluate(*cur, out);
}

void FieldOperator::apply_transpose_add(const Mat& w, double coeff, Mat& out) const {
    Mat a, b;
    points_->evaluate_transpose(w, a);
    Mat* cur = &a;
    for (std::size_t d = axis_ops_.size(); d-- > 0;) {
        if (!axis_ops_[d]) continue;
        Mat& dst = (cur == &a) ? b : a;
        apply_axis(*axis_ops_[d], true, shape_, d, *cur, dst);
        cur = &dst;
    }
    if (out.rows() != cur->rows() || out.cols() != cur->cols())
        throw std::invalid_argument("FieldOperator::apply_transpose_add: output shape mismatch");
    out.noalias() += coeff * (*cur);
}

}  // namespace bwler
