#include "bwler/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "bwler/kernels.hpp"

namespace bwler {
namespace {

using Clock = std::chrono::steady_clock;

void require_finite_loss(double loss, std::size_t it) {
    if (!std::isfinite(loss))
        throw NumericalError("non-finite loss at iteration " + std::to_string(it));
}

// Appends the loss of the current iterate, logs L2RE on schedule.
void record(TrainState& st, double loss, const TrainOptions& opts, const char* tag) {
    require_finite_loss(loss, st.iteration);
    st.loss.push_back(loss);
    const bool due = opts.log_every > 0 && st.iteration % opts.log_every == 0;
    if (due && opts.l2re) st.l2re.push_back({st.iteration, opts.l2re(st.model)});
    if (due && opts.progress) {
        char l2[32] = "-";
        if (opts.l2re && !st.l2re.empty()) std::snprintf(l2, sizeof l2, "%.6e", st.l2re.back().l2re);
        const double step = st.step.empty() ? 0.0 : st.step.back();
        std::fprintf(stderr, "[%s] iter %zu  loss %.6e  l2re %s  step %.3e\n", tag, st.iteration, loss, l2, step);
    }
}

void finish_iteration(TrainState& st, const Vec& theta, double step, Clock::time_point t0) {
    if (!theta.allFinite()) throw NumericalError("non-finite parameters at iteration " + std::to_string(st.iteration));
    st.model.set_theta(theta);
    st.step.push_back(step);
    st.seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    ++st.iteration;
}

// Loss of the final iterate, appended once a run ends.
void close_run(LeastSquaresObjective& obj, TrainState& st, const TrainOptions& opts, const char* tag) {
    const double l = obj.value(st.model.theta());
    require_finite_loss(l, st.iteration);
    st.loss.push_back(l);
    if (opts.l2re && (st.l2re.empty() || st.l2re.back().iteration != st.iteration))
        st.l2re.push_back({st.iteration, opts.l2re(st.model)});
    if (opts.progress)
        std::fprintf(stderr, "[%s] done at iter %zu  loss %.6e  (%s)\n", tag, st.iteration, l,
                     st.stop_reason.empty() ? "step budget" : st.stop_reason.c_str());
}

// The per-run loss list excludes the closing entry of the previous run.
void reopen_run(TrainState& st) {
    if (st.loss.size() > st.iteration) st.loss.pop_back();
    st.stop_reason.clear();
}

Mat gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

Mat thin_q(const Mat& a) {
    Eigen::HouseholderQR<Mat> qr(a);
    return qr.householderQ() * Mat::Identity(a.rows(), a.cols());
}

void build_nystrom(const LeastSquaresObjective& obj, TrainState& st, const NncgConfig& cfg, double mu_override) {
    const auto p = static_cast<Eigen::Index>(obj.parameter_count());
    const auto r = static_cast<Eigen::Index>(cfg.rank);
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (st.iteration + 1));
    const Mat omega = thin_q(gaussian(p, r, rng));
    const Mat y = obj.hvp(omega, cfg.hvp_mode);
    const double trace_est = static_cast<double>(p) / static_cast<double>(r) * (omega.cwiseProduct(y)).sum();
    const double nu = std::sqrt(static_cast<double>(p)) * std::numeric_limits<double>::epsilon() * y.norm();
    const Mat y_nu = y + nu * omega;
    Mat core = omega.transpose() * y_nu;
    core = 0.5 * (core + core.transpose());

    Eigen::HouseholderQR<Mat> qr(y_nu);
    const Mat q = qr.householderQ() * Mat::Identity(p, r);
    const Mat rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    Eigen::LDLT<Mat> ldlt(core);
    Mat m = rr * ldlt.solve(rr.transpose());
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    // eigenvalues ascending; reorder to non-increasing
    const Vec ev = es.eigenvalues().reverse();
    const Mat z = es.eigenvectors().rowwise().reverse();
    st.nystrom.u = q * z;
    st.nystrom.lambda = (ev.array() - nu).max(0.0).matrix();
    if (mu_override >= 0.0) st.nystrom.mu = mu_override;
    else if (cfg.damping >= 0.0) st.nystrom.mu = cfg.damping;
    else st.nystrom.mu = 1e-8 * std::max(trace_est, std::numeric_limits<double>::min());
    st.nystrom.built_at = st.iteration;
    st.nystrom.valid = true;
}

Vec apply_precond(const NystromFactors& f, const Vec& v) {
    const Vec c = f.u.transpose() * v;
    const double lr = f.lambda(f.lambda.size() - 1);
    const Vec scaled = ((lr + f.mu) / (f.lambda.array() + f.mu)).matrix().cwiseProduct(c);
    return f.u * (scaled - c) + v;
}

enum class CgStatus { Ok, Breakdown };

CgStatus pcg(const LeastSquaresObjective& obj, const NystromFactors& f, HvpMode mode, const Vec& b,
             std::size_t iters, Vec& x) {
    x = Vec::Zero(b.size());
    Vec r = b;
    Vec z = apply_precond(f, r);
    Vec d = z;
    double rz = r.dot(z);
    const double stop = 1e-14 * b.norm();
    for (std::size_t k = 0; k < iters; ++k) {
        if (r.norm() <= stop) break;
        const Vec hd = obj.hvp(d, mode).col(0) + f.mu * d;
        const double curv = d.dot(hd);
        if (!(curv > 0.0) || !std::isfinite(curv)) return CgStatus::Breakdown;
        const double alpha = rz / curv;
        x.noalias() += alpha * d;
        r.noalias() -= alpha * hd;
        z = apply_precond(f, r);
        const double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
    }
    return CgStatus::Ok;
}

}  // namespace

std::string optimizer_name(const OptimizerConfig& cfg) {
    if (std::holds_alternative<GdConfig>(cfg)) return "gd";
    if (std::holds_alternative<AdamConfig>(cfg)) return "adam";
    return "nncg";
}

double cosine_lr(std::size_t t, std::size_t total, double lr0, double lr_min) {
    if (total == 0) return lr0;
    const double lo = std::min(lr_min, lr0);
    const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(total));
    return lo + 0.5 * (lr0 - lo) * (1.0 + std::cos(std::numbers::pi * frac));
}

double power_iteration_lmax(const LeastSquaresObjective& obj, HvpMode mode, std::uint64_t seed, std::size_t max_iters,
                            double tol) {
    std::mt19937_64 rng(seed);
    Mat v = gaussian(static_cast<Eigen::Index>(obj.parameter_count()), 1, rng);
    v /= v.norm();
    double lam = 0.0;
    for (std::size_t k = 0; k < max_iters; ++k) {
        const Mat hv = obj.hvp(v, mode);
        const double next = v.col(0).dot(hv.col(0));
        const double nrm = hv.norm();
        if (nrm == 0.0) return 0.0;
        v = hv / nrm;
        const bool converged = k > 0 && std::abs(next - lam) <= tol * std::abs(next);
        lam = next;
        if (converged) break;
    }
    return lam;
}

void run_gd(LeastSquaresObjective& obj, TrainState& st, std::size_t steps, const GdConfig& cfg,
            const TrainOptions& opts) {
    reopen_run(st);
    if (!cfg.step.automatic && !(cfg.step.eta >= 0.0)) throw std::invalid_argument("gd: step size must be >= 0");
    Vec theta = st.model.theta(), grad;
    double eta = cfg.step.eta;
    for (std::size_t k = 0; k < steps; ++k) {
        const auto t0 = Clock::now();
        const double l = obj.value_and_gradient(theta, grad);
        if (k == 0 && cfg.step.automatic) {
            if (!obj.is_quadratic()) throw std::invalid_argument("gd: automatic step size needs a quadratic loss");
            const double lmax = power_iteration_lmax(obj, HvpMode::GaussNewton, 0);
            if (!(lmax > 0.0)) throw NumericalError("gd: Hessian has no positive eigenvalue");
            eta = 1.0 / lmax;
        }
        record(st, l, opts, "gd");
        if (grad.norm() <= cfg.grad_tol) {
            st.stop_reason = "gradient tolerance";
            break;
        }
        theta.noalias() -= eta * grad;
        finish_iteration(st, theta, eta, t0);
    }
    close_run(obj, st, opts, "gd");
}

void run_adam(LeastSquaresObjective& obj, TrainState& st, std::size_t steps, const AdamConfig& cfg,
              const TrainOptions& opts) {
    reopen_run(st);
    if (!(cfg.lr0 >= 0.0)) throw std::invalid_argument("adam: lr0 must be >= 0");
    Vec theta = st.model.theta(), grad;
    auto& mo = st.adam;
    if (mo.m.size() != theta.size()) {
        mo.m = Vec::Zero(theta.size());
        mo.v = Vec::Zero(theta.size());
        mo.t = 0;
    }
    for (std::size_t k = 0; k < steps; ++k) {
        const auto t0 = Clock::now();
        const double l = obj.value_and_gradient(theta, grad);
        const double lr = cfg.cosine ? cosine_lr(k, steps, cfg.lr0, cfg.lr_min) : cfg.lr0;
        record(st, l, opts, "adam");
        ++mo.t;
        mo.m = cfg.beta1 * mo.m + (1.0 - cfg.beta1) * grad;
        mo.v = cfg.beta2 * mo.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(mo.t));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(mo.t));
        theta.array() -= lr * (mo.m.array() / c1) / ((mo.v.array() / c2).sqrt() + cfg.eps);
        finish_iteration(st, theta, lr, t0);
    }
    close_run(obj, st, opts, "adam");
}

void run_nncg(LeastSquaresObjective& obj, TrainState& st, std::size_t steps, const NncgConfig& cfg,
              const TrainOptions& opts) {
    reopen_run(st);
    if (cfg.rank < 1 || cfg.cg_iters < 1) throw std::invalid_argument("nncg: rank and cg_iters must be >= 1");
    if (cfg.rank > obj.parameter_count()) throw std::invalid_argument("nncg: rank exceeds the parameter count");
    Vec theta = st.model.theta(), grad;
    const bool quadratic = obj.is_quadratic();
    if (st.nystrom.valid && st.nystrom.u.rows() != theta.size()) st.nystrom.valid = false;
    bool stale = true;  // factors from an earlier run were built for a different objective
    for (std::size_t k = 0; k < steps; ++k) {
        const auto t0 = Clock::now();
        const double l = obj.value_and_gradient(theta, grad);
        record(st, l, opts, "nncg");
        if (l == 0.0 || grad.norm() == 0.0) {
            st.stop_reason = "zero gradient";
            break;
        }
        const bool refresh = stale || !st.nystrom.valid ||
                             (!quadratic && cfg.precond_every > 0 && st.iteration - st.nystrom.built_at >= cfg.precond_every);
        if (refresh) build_nystrom(obj, st, cfg, -1.0);
        stale = false;

        Vec p;
        if (pcg(obj, st.nystrom, cfg.hvp_mode, -grad, cfg.cg_iters, p) == CgStatus::Breakdown) {
            st.nystrom.mu *= 10.0;
            if (pcg(obj, st.nystrom, cfg.hvp_mode, -grad, cfg.cg_iters, p) == CgStatus::Breakdown)
                throw NumericalError("nncg: CG breakdown persists after increasing damping");
        }

        double alpha = 1.0;
        if (cfg.line_search == LineSearch::Backtracking) {
            const double slope = grad.dot(p);
            bool accepted = false;
            if (slope < 0.0) {
                for (int tries = 0; tries < 40; ++tries, alpha *= 0.5) {
                    const double trial = obj.value(theta + alpha * p);
                    if (std::isfinite(trial) && trial <= l + 1e-4 * alpha * slope) {
                        accepted = true;
                        break;
                    }
                }
            }
            if (!accepted) {
                st.stop_reason = "line search stalled";
                break;
            }
        }
        theta.noalias() += alpha * p;
        finish_iteration(st, theta, alpha, t0);
    }
    close_run(obj, st, opts, "nncg");
}

TrainState run_stages(const std::vector<Stage>& stages, BwlerModel initial, const ObjectiveFactory& make_objective,
                      const TrainOptions& opts) {
    if (stages.empty()) throw std::invalid_argument("run_stages: no stages");
    TrainState st(std::move(initial));
    for (const auto& s : stages) {
        if (s.grid || s.deriv) {
            const TensorGrid g = s.grid ? *s.grid : st.model.grid();
            if (!g.same_domain(st.model.grid())) throw DomainError("run_stages: stage grid covers a different domain");
            const auto d = s.deriv ? *s.deriv : (s.grid ? BwlerModel(g).deriv_config() : st.model.deriv_config());
            st.model = warm_start(BwlerModel(g, d), st.model);
            st.adam = {};
            st.nystrom = {};
        }
        st.stage_starts.push_back(st.iteration);
        auto obj = make_objective(st.model);
        std::visit(
            [&](const auto& cfg) {
                using T = std::decay_t<decltype(cfg)>;
                if constexpr (std::is_same_v<T, GdConfig>) run_gd(obj, st, s.steps, cfg, opts);
                else if constexpr (std::is_same_v<T, AdamConfig>) run_adam(obj, st, s.steps, cfg, opts);
                else run_nncg(obj, st, s.steps, cfg, opts);
            },
            s.optimizer);
    }
    return st;
}

}  // namespace bwler
