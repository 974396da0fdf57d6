#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bwler/model.hpp"
#include "bwler/objective.hpp"

namespace bwler {

struct StepSize {
    bool automatic = true;  // eta = 1 / lambda_max(H)
    double eta = 0.0;

    static StepSize Auto() { return {}; }
    static StepSize Fixed(double eta) { return {false, eta}; }
};

struct GdConfig {
    StepSize step;
    double grad_tol = 0.0;  // stop once ||grad|| <= grad_tol
};

struct AdamConfig {
    double lr0 = 1e-3;
    double lr_min = 1e-6;  // clipped to lr0 when lr0 is smaller
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool cosine = true;
};

enum class LineSearch { None, Backtracking };

struct NncgConfig {
    std::size_t rank = 1000;
    std::size_t cg_iters = 100;
    double damping = -1.0;  // negative: 1e-8 x Hessian trace estimate
    HvpMode hvp_mode = HvpMode::GaussNewton;
    LineSearch line_search = LineSearch::Backtracking;
    std::size_t precond_every = 20;  // ignored for quadratic objectives
    std::uint64_t seed = 0;
};

using OptimizerConfig = std::variant<GdConfig, AdamConfig, NncgConfig>;
std::string optimizer_name(const OptimizerConfig& cfg);

struct TrainOptions {
    std::size_t log_every = 100;
    /// Test-set error of a model; L2RE is skipped when empty.
    std::function<double(const BwlerModel&)> l2re;
    /// Progress lines on stderr every log_every iterations.
    bool progress = false;
};

struct AdamMoments {
    Vec m, v;
    std::size_t t = 0;
};

struct NystromFactors {
    Mat u;       // P x r, orthonormal columns
    Vec lambda;  // non-increasing, >= 0
    double mu = 0.0;
    std::size_t built_at = 0;
    bool valid = false;
};

struct L2reEntry {
    std::size_t iteration;
    double l2re;
};

/// Training state shared by all optimizers. loss[k] is the loss of the
/// k-th iterate (loss[0] is the initial one); every completed iteration
/// appends one entry to loss, step and seconds.
struct TrainState {
    explicit TrainState(BwlerModel m) : model(std::move(m)) {}

    BwlerModel model;
    std::size_t iteration = 0;
    std::vector<double> loss;
    std::vector<double> step;  // learning rate or accepted step length
    std::vector<double> seconds;
    std::vector<L2reEntry> l2re;
    std::vector<std::size_t> stage_starts;
    std::string stop_reason;

    AdamMoments adam;
    NystromFactors nystrom;
};

double cosine_lr(std::size_t t, std::size_t total, double lr0, double lr_min);

/// Largest eigenvalue of the Hessian at the objective's last linearization
/// point: power iteration, 100 steps or relative change below 1e-10.
double power_iteration_lmax(const LeastSquaresObjective& obj, HvpMode mode, std::uint64_t seed,
                            std::size_t max_iters = 100, double tol = 1e-10);

/// The run_* functions continue `state` for `steps` iterations. Non-finite
/// losses or updates throw NumericalError.
void run_gd(LeastSquaresObjective& obj, TrainState& state, std::size_t steps, const GdConfig& cfg,
            const TrainOptions& opts = {});
void run_adam(LeastSquaresObjective& obj, TrainState& state, std::size_t steps, const AdamConfig& cfg,
              const TrainOptions& opts = {});
void run_nncg(LeastSquaresObjective& obj, TrainState& state, std::size_t steps, const NncgConfig& cfg,
              const TrainOptions& opts = {});

using ObjectiveFactory = std::function<LeastSquaresObjective(const BwlerModel&)>;

struct Stage {
    OptimizerConfig optimizer;
    std::size_t steps = 0;
    std::optional<TensorGrid> grid;                   // keep the current grid when empty
    std::optional<std::vector<DiffOperator>> deriv;   // keep the current configuration when empty
};

/// Runs the stages in order. A stage with a new grid warm-starts from the
/// previous model; grids must cover the same domain.
TrainState run_stages(const std::vector<Stage>& stages, BwlerModel initial, const ObjectiveFactory& make_objective,
                      const TrainOptions& opts = {});

}  // namespace bwler
