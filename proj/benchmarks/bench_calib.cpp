#include <benchmark/benchmark.h>

#include "calib/calibration.hpp"
#include "calib/learning.hpp"

using namespace calib;

static void BM_svd(benchmark::State& state) {
    const std::size_t k = static_cast<std::size_t>(state.range(0));
    const Matrix l = *zero_one_loss(k).dense;
    for (auto _ : state) benchmark::DoNotOptimize(svd(l));
}
BENCHMARK(BM_svd)->Arg(8)->Arg(16)->Arg(32);

static void BM_qp_simplex_projection(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    QpProblem p;
    p.quadratic_term = 2.0 * Matrix::identity(n);
    p.linear_term = Vector(n, -2.0);
    for (std::size_t i = 0; i < n; ++i) {
        Vector row(n, 0.0);
        row[i] = -1.0;
        p.inequalities.emplace_back(row, 0.0);
    }
    p.equalities.emplace_back(Vector(n, 1.0), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_qp(p));
}
BENCHMARK(BM_qp_simplex_projection)->Arg(4)->Arg(16)->Arg(64);

static void BM_numeric_calibration(benchmark::State& state) {
    const unsigned t = static_cast<unsigned>(state.range(0));
    const TaskLoss loss = hamming_loss(t, true);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Tight);
    for (auto _ : state)
        benchmark::DoNotOptimize(numeric_calibration({loss, s, 0.5}));
}
BENCHMARK(BM_numeric_calibration)->Arg(2)->Arg(3)->Arg(4);

static void BM_exact_calibration(benchmark::State& state) {
    const TaskLoss loss = mixed_loss({8, 8}, 0.4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Tight);
    for (auto _ : state)
        benchmark::DoNotOptimize(exact_calibration({loss, s, 0.7}));
}
BENCHMARK(BM_exact_calibration);

static void BM_asgd_steps(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const TaskLoss loss = zero_one_loss(4);
    const ScoreSubspace s = score_subspace(loss, SubspaceMode::Unconstrained);
    const auto [fm, cm] = make_generator(s, loss, 4, 4, 1);
    const SgdConstants c = compute_constants(s, loss.l_max, fm.r_bound, cm.q_bound, n);
    for (auto _ : state)
        benchmark::DoNotOptimize(asgd_train(fm, cm, loss, s, c, n, 1));
}
BENCHMARK(BM_asgd_steps)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
