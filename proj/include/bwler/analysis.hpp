#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bwler/optim.hpp"
#include "bwler/pde.hpp"

namespace bwler {

/// ||pred - truth||_2 / ||truth||_2. Throws on size mismatch or zero truth.
double l2re(const Vec& pred, const Vec& truth);

/// L(i, j) = l_j(x_i): cardinal functions of the axis at the sample points.
Mat interpolation_matrix(const Grid1D& grid, std::span<const double> samples);

/// lambda_max / lambda_min of a symmetric positive semidefinite matrix;
/// +inf when lambda_min <= 1e-15 lambda_max.
double condition_number_sym(const Mat& s);
/// kappa^2(A) = lambda_max(A^T A) / lambda_min(A^T A).
double kappa_sq(const Mat& a);

struct GramMatrices {
    Mat g_emp;       // L^T L / M
    Vec g_pop;       // diagonal, Clenshaw-Curtis weights / 2
    double kappa_sq_emp;
    double kappa_sq_pop;
};
GramMatrices gram_matrices(const Mat& l, std::size_t n);

/// The Gram matrix of the cardinal functions under dx/2 on [-1, 1],
/// integrated exactly with Gauss-Legendre quadrature.
Mat population_gram_exact(std::size_t n);

/// Median of kappa^2(G_emp) over seeds 0..seeds-1 for M uniform samples.
double median_gram_kappa(std::size_t n, std::size_t m, std::size_t seeds, CollocationKind kind = CollocationKind::UniformRandom);

/// Max over `resolution` equispaced points of sum_j |l_j(x)|.
/// Requires resolution >= 10 (size of the axis).
double lebesgue_constant(const Grid1D& grid, std::size_t resolution);

struct CollocationSystem {
    Mat a;
    Vec rhs;
};

/// Square collocation matrix of sum_k coeff_k d^{alpha_k} on the grid nodes,
/// with the given derivative surrogate per axis. With `dirichlet`, rows of
/// nodes on a Chebyshev boundary are replaced by identity rows (rhs 0), which
/// makes pure-derivative operators invertible.
CollocationSystem collocation_matrix(const LinearOperatorSpec& op, const TensorGrid& grid,
                                     const std::vector<DiffOperator>& surrogate, bool dirichlet = false);
/// Same for a linear benchmark; nonlinear problems throw std::invalid_argument.
CollocationSystem collocation_matrix(const PdeProblem& problem, const TensorGrid& grid,
                                     const std::vector<DiffOperator>& surrogate, bool dirichlet = false);

struct EpsOpConfig {
    std::size_t trials = 200;
    std::size_t dense = 2048;
    /// Random coefficients are scaled by decay^-k; 1 samples the whole
    /// degree-N ball, larger values a fixed analytic class.
    double decay = 1.5;
    std::uint64_t seed = 0;
};

/// Monte-Carlo lower estimate of sup ||(D_true - D_sur) v||_inf over unit
/// sup-norm interpolants v, measured at the grid nodes.
double epsilon_op(const Grid1D& grid, std::size_t order, const DiffOperator& true_op, const DiffOperator& surrogate,
                  const EpsOpConfig& cfg = {});

/// Least-squares slope of log(err) against N over the pre-plateau range
/// (until the error stops decreasing or drops below `floor`); returns rho
/// with err ~ rho^-N, or NaN with fewer than two usable points.
double rho_fit(const std::vector<double>& ns, const std::vector<double>& errors, double floor = 1e-13);

struct TheoryProbe {
    std::string kind;
    std::size_t n = 0;
    std::size_t m = 0;
    std::optional<double> kappa_sq;
    std::optional<double> lebesgue;
    std::optional<double> eps_op;
    std::optional<double> rho_fit;
    std::optional<double> m_f;
    std::optional<double> m_u;
};

struct TraceRow {
    std::size_t iteration;
    double loss;
    std::optional<double> l2re;
};

struct Trace {
    std::string name;
    std::vector<TraceRow> rows;
};

Trace make_trace(const std::string& name, const TrainState& state);

/// Self-contained run record: the config echo is whatever the caller needs
/// to re-run (the CLI stores its parsed config sections there).
struct ExperimentReport {
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    std::vector<Trace> traces;
    std::map<std::string, double> metrics;
    std::vector<TheoryProbe> probes;
    std::map<std::string, double> runtime;
    nlohmann::ordered_json tables = nlohmann::ordered_json::object();
};

/// Non-finite numbers are written as the strings "inf", "-inf" and "nan".
nlohmann::ordered_json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::ordered_json& j);
std::string dump_report(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& text);

/// CSV with header iteration,loss,l2re; missing l2re values are empty.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
Trace read_trace_csv(const std::filesystem::path& path, const std::string& name = "");

/// report.json plus one CSV per trace (trace.csv for a single trace,
/// trace_<name>.csv otherwise).
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

struct DecompositionConfig {
    std::vector<DiffOperator> time_stencils;  // FD half-bandwidths and/or spectral
    std::size_t steps = 200;
    NncgConfig nncg;
    std::optional<TensorGrid> grid;
    std::optional<double> lambda_ibc;
    std::size_t test_per_axis = 256;
    std::size_t early = 10;  // iterations used for the initial slope
    std::size_t log_every = 10;
    int jobs = 1;
};

struct DecompositionRow {
    std::string stencil;
    double plateau;    // final test L2RE
    double slope;      // mean log10 loss decrease per iteration over the early phase
    double kappa_sq;   // time-axis collocation matrix with the initial row
    double final_loss;
};

struct DecompositionResult {
    std::vector<DecompositionRow> rows;
    ExperimentReport report;
};

/// Trains one model per time-derivative stencil on a problem with an
/// exact solution and tabulates plateau, early slope and conditioning.
DecompositionResult decomposition_experiment(const PdeProblem& problem, const DecompositionConfig& cfg);

}  // namespace bwler
