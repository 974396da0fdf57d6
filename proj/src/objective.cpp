#include "bwler/objective.hpp"

#include <algorithm>
#include <stdexcept>

#include "bwler/kernels.hpp"

namespace bwler {
namespace {

Vec apply_vec(const FieldOperator& op, const Vec& theta) {
    Mat out;
    op.apply(theta, out);
    return out.col(0);
}

}  // namespace

LinearBlock::LinearBlock(std::vector<std::pair<double, FieldOperator>> terms, Vec target)
    : terms_(std::move(terms)), target_(std::move(target)) {
    if (terms_.empty()) throw std::invalid_argument("LinearBlock: no terms");
    for (const auto& [c, op] : terms_)
        if (op.rows() != rows()) throw std::invalid_argument("LinearBlock: term/target size mismatch");
}

Vec LinearBlock::residual(const Vec& theta) const {
    Vec r = -target_;
    for (const auto& [c, op] : terms_) r.noalias() += c * apply_vec(op, theta);
    return r;
}

void LinearBlock::jvp(const Mat& v, Mat& out) const {
    Mat tmp;
    out.setZero(static_cast<Eigen::Index>(rows()), v.cols());
    for (const auto& [c, op] : terms_) {
        op.apply(v, tmp);
        out.noalias() += c * tmp;
    }
}

void LinearBlock::vjp_add(const Mat& w, double coeff, Mat& out) const {
    for (const auto& [c, op] : terms_) op.apply_transpose_add(w, coeff * c, out);
}

ReactionBlock::ReactionBlock(FieldOperator ut, FieldOperator u, double rho)
    : ut_(std::move(ut)), u_(std::move(u)), rho_(rho) {}

Vec ReactionBlock::residual(const Vec& theta) const {
    const Vec u = apply_vec(u_, theta);
    return apply_vec(ut_, theta) - rho_ * (u.array() * (1.0 - u.array())).matrix();
}

void ReactionBlock::linearize(const Vec& theta) {
    slope_ = rho_ * (1.0 - 2.0 * apply_vec(u_, theta).array()).matrix();
}

void ReactionBlock::jvp(const Mat& v, Mat& out) const {
    Mat ev;
    ut_.apply(v, out);
    u_.apply(v, ev);
    out.noalias() -= slope_.asDiagonal() * ev;
}

void ReactionBlock::vjp_add(const Mat& w, double coeff, Mat& out) const {
    ut_.apply_transpose_add(w, coeff, out);
    const Mat sw = slope_.asDiagonal() * w;
    u_.apply_transpose_add(sw, -coeff, out);
}

void ReactionBlock::curvature_add(const Vec& w, const Mat& v, double coeff, Mat& out) const {
    Mat ev;
    u_.apply(v, ev);
    const Vec s = 2.0 * rho_ * w;
    const Mat sev = s.asDiagonal() * ev;
    u_.apply_transpose_add(sev, coeff, out);
}

BurgersBlock::BurgersBlock(FieldOperator ut, FieldOperator u, FieldOperator ux, FieldOperator uxx, double nu)
    : ut_(std::move(ut)), u_(std::move(u)), ux_(std::move(ux)), uxx_(std::move(uxx)), nu_(nu) {}

Vec BurgersBlock::residual(const Vec& theta) const {
    const Vec u = apply_vec(u_, theta);
    const Vec ux = apply_vec(ux_, theta);
    return apply_vec(ut_, theta) + u.cwiseProduct(ux) - nu_ * apply_vec(uxx_, theta);
}

void BurgersBlock::linearize(const Vec& theta) {
    u0_ = apply_vec(u_, theta);
    ux0_ = apply_vec(ux_, theta);
}

void BurgersBlock::jvp(const Mat& v, Mat& out) const {
    Mat tmp;
    ut_.apply(v, out);
    u_.apply(v, tmp);
    out.noalias() += ux0_.asDiagonal() * tmp;
    ux_.apply(v, tmp);
    out.noalias() += u0_.asDiagonal() * tmp;
    uxx_.apply(v, tmp);
    out.noalias() -= nu_ * tmp;
}

void BurgersBlock::vjp_add(const Mat& w, double coeff, Mat& out) const {
    ut_.apply_transpose_add(w, coeff, out);
    u_.apply_transpose_add(ux0_.asDiagonal() * w, coeff, out);
    ux_.apply_transpose_add(u0_.asDiagonal() * w, coeff, out);
    uxx_.apply_transpose_add(w, -coeff * nu_, out);
}

void BurgersBlock::curvature_add(const Vec& w, const Mat& v, double coeff, Mat& out) const {
    Mat ev, dv;
    u_.apply(v, ev);
    ux_.apply(v, dv);
    u_.apply_transpose_add(w.asDiagonal() * dv, coeff, out);
    ux_.apply_transpose_add(w.asDiagonal() * ev, coeff, out);
}

void LeastSquaresObjective::add(std::string group, double weight, std::shared_ptr<ResidualBlock> block) {
    if (!(weight > 0.0)) throw std::invalid_argument("objective weights must be positive");
    if (!block || block->rows() == 0) throw std::invalid_argument("objective block is empty");
    entries_.push_back({std::move(group), weight, std::move(block)});
    residuals_.clear();
}

bool LeastSquaresObjective::is_quadratic() const {
    for (const auto& e : entries_)
        if (!e.block->is_linear()) return false;
    return true;
}

double LeastSquaresObjective::value(const Vec& theta) const {
    double total = 0.0;
    for (const auto& e : entries_) total += e.weight * pairwise_sum_squares(e.block->residual(theta));
    return total;
}

std::vector<std::pair<std::string, double>> LeastSquaresObjective::breakdown(const Vec& theta) const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : entries_) {
        const double v = e.weight * pairwise_sum_squares(e.block->residual(theta));
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == e.group; });
        if (it == out.end()) out.emplace_back(e.group, v);
        else it->second += v;
    }
    return out;
}

double LeastSquaresObjective::value_and_gradient(const Vec& theta, Vec& grad) {
    if (static_cast<std::size_t>(theta.size()) != n_) throw std::invalid_argument("objective: parameter size mismatch");
    if (entries_.empty()) throw std::invalid_argument("objective has no residual blocks");
    residuals_.clear();
    Mat g = Mat::Zero(theta.size(), 1);
    double total = 0.0;
    for (const auto& e : entries_) {
        e.block->linearize(theta);
        residuals_.push_back(e.block->residual(theta));
        total += e.weight * pairwise_sum_squares(residuals_.back());
        e.block->vjp_add(residuals_.back(), 2.0 * e.weight, g);
    }
    grad = g.col(0);
    return total;
}

Mat LeastSquaresObjective::hvp(const Mat& v, HvpMode mode) const {
    if (residuals_.size() != entries_.size()) throw std::logic_error("hvp called before value_and_gradient");
    Mat out = Mat::Zero(v.rows(), v.cols());
    Mat jv;
    for (std::size_t b = 0; b < entries_.size(); ++b) {
        const auto& e = entries_[b];
        e.block->jvp(v, jv);
        e.block->vjp_add(jv, 2.0 * e.weight, out);
        if (mode == HvpMode::Exact && !e.block->is_linear())
            e.block->curvature_add(residuals_[b], v, 2.0 * e.weight, out);
    }
    return out;
}

}  // namespace bwler
