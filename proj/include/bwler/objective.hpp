#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bwler/model.hpp"
#include "bwler/types.hpp"

namespace bwler {

enum class HvpMode { GaussNewton, Exact };

/// One block r(theta) of a nonlinear least-squares objective, together with
/// the first- and second-order actions used by the optimizers. jvp, vjp and
/// curvature are evaluated at the point passed to the last linearize().
class ResidualBlock {
public:
    virtual ~ResidualBlock() = default;

    virtual std::size_t rows() const = 0;
    virtual bool is_linear() const = 0;
    virtual Vec residual(const Vec& theta) const = 0;

    virtual void linearize(const Vec& theta) { (void)theta; }
    /// out = J V
    virtual void jvp(const Mat& v, Mat& out) const = 0;
    /// out += coeff * J^T W
    virtual void vjp_add(const Mat& w, double coeff, Mat& out) const = 0;
    /// out += coeff * sum_i w_i (d^2 r_i) V
    virtual void curvature_add(const Vec& w, const Mat& v, double coeff, Mat& out) const {
        (void)w, (void)v, (void)coeff, (void)out;
    }
};

/// r = sum_k c_k A_k theta - target, with each A_k a FieldOperator.
class LinearBlock : public ResidualBlock {
public:
    LinearBlock(std::vector<std::pair<double, FieldOperator>> terms, Vec target);

    std::size_t rows() const override { return static_cast<std::size_t>(target_.size()); }
    bool is_linear() const override { return true; }
    Vec residual(const Vec& theta) const override;
    void jvp(const Mat& v, Mat& out) const override;
    void vjp_add(const Mat& w, double coeff, Mat& out) const override;

    const Vec& target() const { return target_; }

private:
    std::vector<std::pair<double, FieldOperator>> terms_;
    Vec target_;
};

/// r = u_t - rho u (1 - u)
class ReactionBlock : public ResidualBlock {
public:
    ReactionBlock(FieldOperator ut, FieldOperator u, double rho);

    std::size_t rows() const override { return ut_.rows(); }
    bool is_linear() const override { return false; }
    Vec residual(const Vec& theta) const override;
    void linearize(const Vec& theta) override;
    void jvp(const Mat& v, Mat& out) const override;
    void vjp_add(const Mat& w, double coeff, Mat& out) const override;
    void curvature_add(const Vec& w, const Mat& v, double coeff, Mat& out) const override;

private:
    FieldOperator ut_, u_;
    double rho_;
    Vec slope_;  // rho (1 - 2u) at the linearization point
};

/// r = u_t + u u_x - nu u_xx
class BurgersBlock : public ResidualBlock {
public:
    BurgersBlock(FieldOperator ut, FieldOperator u, FieldOperator ux, FieldOperator uxx, double nu);

    std::size_t rows() const override { return ut_.rows(); }
    bool is_linear() const override { return false; }
    Vec residual(const Vec& theta) const override;
    void linearize(const Vec& theta) override;
    void jvp(const Mat& v, Mat& out) const override;
    void vjp_add(const Mat& w, double coeff, Mat& out) const override;
    void curvature_add(const Vec& w, const Mat& v, double coeff, Mat& out) const override;

private:
    FieldOperator ut_, u_, ux_, uxx_;
    double nu_;
    Vec u0_, ux0_;
};

/// L(theta) = sum_b weight_b * ||r_b(theta)||^2.
class LeastSquaresObjective {
public:
    struct Entry {
        std::string group;
        double weight;
        std::shared_ptr<ResidualBlock> block;
    };

    explicit LeastSquaresObjective(std::size_t parameter_count) : n_(parameter_count) {}

    void add(std::string group, double weight, std::shared_ptr<ResidualBlock> block);

    std::size_t parameter_count() const { return n_; }
    const std::vector<Entry>& entries() const { return entries_; }
    bool is_quadratic() const;

    double value(const Vec& theta) const;
    /// Per-group weighted contributions, in insertion order of first appearance.
    std::vector<std::pair<std::string, double>> breakdown(const Vec& theta) const;

    /// Linearizes every block at theta and returns the loss and gradient.
    double value_and_gradient(const Vec& theta, Vec& grad);
    /// Hessian (Gauss-Newton or exact) applied to the columns of v at the
    /// last point passed to value_and_gradient.
    Mat hvp(const Mat& v, HvpMode mode) const;

private:
    std::size_t n_;
    std::vector<Entry> entries_;
    std::vector<Vec> residuals_;  // at the linearization point
};

}  // namespace bwler
