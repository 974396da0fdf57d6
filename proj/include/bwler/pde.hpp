#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bwler/model.hpp"
#include "bwler/objective.hpp"

namespace bwler {

/// Constant-coefficient linear operator L u = sum_k coeff_k d^{alpha_k} u.
struct OperatorTerm {
    double coeff;
    std::vector<std::size_t> orders;
};
struct LinearOperatorSpec {
    std::vector<OperatorTerm> terms;
};

/// Optimizer settings reported for a benchmark.
struct SolverDefaults {
    std::string optimizer = "nncg";
    std::size_t steps = 0;
    std::size_t rank = 0;
    std::size_t cg_iters = 0;
};

/// One initial/boundary condition group: a linear residual block and a name.
struct IbcGroup {
    std::string name;
    std::shared_ptr<LinearBlock> block;
};

class PdeProblem {
public:
    virtual ~PdeProblem() = default;

    virtual std::string name() const = 0;
    /// Names of the coordinates in axis order, e.g. {"t", "x"}.
    virtual std::vector<std::string> axis_names() const = 0;
    virtual std::vector<Interval> domain() const = 0;
    virtual TensorGrid default_grid() const = 0;
    virtual std::vector<DiffOperator> default_deriv(const TensorGrid& grid) const;
    virtual double default_lambda_ibc() const = 0;
    virtual SolverDefaults default_solver() const = 0;
    /// Problem parameters (c, rho, beta, nu) by name.
    virtual std::map<std::string, double> parameters() const { return {}; }

    virtual bool is_linear() const = 0;
    /// Set for linear problems only.
    virtual std::optional<LinearOperatorSpec> linear_operator() const { return std::nullopt; }

    virtual bool has_exact() const { return false; }
    virtual double exact(std::span<const double> point) const;

    /// False for points removed from the domain (Poisson holes).
    virtual bool in_domain(std::span<const double> point) const {
        (void)point;
        return true;
    }

    virtual std::shared_ptr<ResidualBlock> pde_block(const BwlerModel& model,
                                                     std::shared_ptr<const PointSet> points) const = 0;
    virtual std::vector<IbcGroup> ibc_groups(const BwlerModel& model) const = 0;
};

/// Built-in benchmark names: convection, reaction, wave, burgers, poisson.
std::vector<std::string> problem_names();
/// Unknown names or parameters throw std::invalid_argument.
std::unique_ptr<PdeProblem> make_problem(const std::string& name, const std::map<std::string, double>& params = {});

enum class CollocationKind { Nodal, UniformRandom, ChebyshevWeighted, Equispaced };
std::string to_string(CollocationKind kind);
CollocationKind parse_collocation_kind(const std::string& text);

struct CollocationScheme {
    CollocationKind kind = CollocationKind::Nodal;
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

using PointMask = std::function<bool(std::span<const double>)>;

/// Collocation points over the box spanned by `grid`, one per row.
/// Nodal returns the grid nodes (ignoring count); random kinds draw
/// `count` points deterministically from the seed. Equispaced uses
/// round(count^(1/d)) points per axis including the endpoints. Points
/// rejected by the mask are dropped (nodal/equispaced) or redrawn.
RowMat sample_collocation(const CollocationScheme& scheme, const TensorGrid& grid, const PointMask& mask = {});

/// Collocation point set for a problem; nodal schemes give an exact gather.
std::shared_ptr<const PointSet> collocation_points(const PdeProblem& problem, const TensorGrid& grid,
                                                   const CollocationScheme& scheme);

/// F(u_theta, x) at the given points; masked points are rejected.
Vec residual(const PdeProblem& problem, const BwlerModel& model, const RowMat& points);
/// All initial/boundary mismatches, concatenated in group order.
Vec ibc_residual(const PdeProblem& problem, const BwlerModel& model);

/// Physics-informed objective: mean square residual over the collocation
/// points plus lambda_ibc times the mean square over all IBC points.
LeastSquaresObjective build_objective(const PdeProblem& problem, const BwlerModel& model, double lambda_ibc,
                                      std::shared_ptr<const PointSet> collocation);

struct LossValue {
    double value;
    Vec gradient;
};
LossValue loss(const PdeProblem& problem, const BwlerModel& model, double lambda_ibc, const CollocationScheme& scheme);

Vec exact_solution(const PdeProblem& problem, const RowMat& points);

/// Plain-text reference data: one header line naming the columns, then
/// whitespace-separated rows of coordinates followed by the value.
struct ReferenceData {
    std::vector<std::string> columns;
    RowMat points;
    Vec values;
};
ReferenceData load_reference(const std::filesystem::path& path);
void save_reference(const ReferenceData& data, const std::filesystem::path& path);

/// Equispaced test points (per_axis per axis, endpoints included), with
/// masked points removed.
RowMat test_points(const PdeProblem& problem, std::size_t per_axis = 256);

/// Least-squares fit of node values to samples: r = E theta - y.
LeastSquaresObjective interpolation_objective(const BwlerModel& model, const RowMat& points, const Vec& targets);

}  // namespace bwler
