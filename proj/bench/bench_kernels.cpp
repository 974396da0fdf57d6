#include <random>

#include <benchmark/benchmark.h>

#include "bwler/diff.hpp"
#include "bwler/interp.hpp"
#include "bwler/kernels.hpp"
#include "bwler/transforms.hpp"

using namespace bwler;

namespace {

Mat random_batch(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

AxisOperator spectral_op(std::size_t n) { return AxisOperator(cheb_fft_diff_matrix(n)); }

AxisOperator fd_op(std::size_t n) {
    return canonical_derivative(Grid1D::chebyshev(n), parse_diff_operator("fd:1", Grid1D::chebyshev(n)), 1);
}

// args: nodes per axis, batch columns, axis
template <bool Reference>
void run_axis(benchmark::State& state, const AxisOperator& op) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto r = state.range(1);
    const auto axis = static_cast<std::size_t>(state.range(2));
    const std::vector<std::size_t> shape{n + 1, n + 1};
    const Mat data = random_batch(static_cast<Eigen::Index>((n + 1) * (n + 1)), r, 1);
    Mat out;
    for (auto _ : state) {
        if constexpr (Reference) apply_axis_reference(op, false, shape, axis, data, out);
        else apply_axis(op, false, shape, axis, data, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * r);
}

void BM_apply_axis_dense(benchmark::State& s) { run_axis<false>(s, spectral_op(static_cast<std::size_t>(s.range(0)))); }
void BM_apply_axis_dense_reference(benchmark::State& s) { run_axis<true>(s, spectral_op(static_cast<std::size_t>(s.range(0)))); }
void BM_apply_axis_sparse(benchmark::State& s) { run_axis<false>(s, fd_op(static_cast<std::size_t>(s.range(0)))); }
void BM_apply_axis_sparse_reference(benchmark::State& s) { run_axis<true>(s, fd_op(static_cast<std::size_t>(s.range(0)))); }

void axis_args(benchmark::internal::Benchmark* b) {
    for (int n : {40, 80, 160})
        for (int r : {1, 32})
            for (int axis : {0, 1}) b->Args({n, r, axis});
}

BENCHMARK(BM_apply_axis_dense)->Apply(axis_args);
BENCHMARK(BM_apply_axis_dense_reference)->Apply(axis_args);
BENCHMARK(BM_apply_axis_sparse)->Apply(axis_args);
BENCHMARK(BM_apply_axis_sparse_reference)->Apply(axis_args);

struct EvalFixture {
    TensorGrid grid;
    std::vector<double> values;
    RowMat points;

    explicit EvalFixture(std::size_t n, Eigen::Index m)
        : grid({Grid1D::chebyshev(n), Grid1D::fourier(n)}), points(m, 2) {
        const Mat v = random_batch(static_cast<Eigen::Index>(grid.size()), 1, 2);
        values.assign(v.data(), v.data() + v.size());
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.0, 6.283185307179586);
        for (Eigen::Index i = 0; i < m; ++i) {
            points(i, 0) = u(rng);
            points(i, 1) = w(rng);
        }
    }
};

void BM_tensor_eval_batch(benchmark::State& state) {
    const EvalFixture f(static_cast<std::size_t>(state.range(0)), state.range(1));
    const NodeValues nv{f.grid, f.values};
    for (auto _ : state) benchmark::DoNotOptimize(tensor_eval(nv, f.points).data());
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_tensor_eval_serial(benchmark::State& state) {
    const EvalFixture f(static_cast<std::size_t>(state.range(0)), state.range(1));
    const NodeValues nv{f.grid, f.values};
    std::vector<double> out(static_cast<std::size_t>(f.points.rows()));
    for (auto _ : state) {
        for (Eigen::Index i = 0; i < f.points.rows(); ++i)
            out[static_cast<std::size_t>(i)] = tensor_eval(nv, std::span<const double>(f.points.row(i).data(), 2));
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

BENCHMARK(BM_tensor_eval_batch)->Args({40, 4096})->Args({80, 4096});
BENCHMARK(BM_tensor_eval_serial)->Args({40, 4096})->Args({80, 4096});

}  // namespace

BENCHMARK_MAIN();
