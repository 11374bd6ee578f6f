#include <benchmark/benchmark.h>

#include <random>

#include "lyapsplit/solver.hpp"
#include "lyapsplit/types.hpp"

using namespace lyapsplit;

namespace {

// Sparse Gershgorin-stable test matrix, ~5 nnz per row.
MatrixHandle sparse_stable(Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<Index> col(0, n - 1);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> rowsum(static_cast<size_t>(n), 0.0);
    for (Index i = 0; i < n; ++i) {
        for (int e = 0; e < 2; ++e) {
            const Index j = col(rng);
            if (j == i) continue;
            const double v = val(rng);
            trips.emplace_back(i, j, v);
            trips.emplace_back(j, i, v);
            rowsum[static_cast<size_t>(i)] += std::abs(v);
            rowsum[static_cast<size_t>(j)] += std::abs(v);
        }
    }
    for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, -rowsum[static_cast<size_t>(i)] - 0.5);
    return MatrixHandle::sparse_from_triplets(n, n, trips);
}

Eigen::MatrixXd random_block(Index n, Index p, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd B(n, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) B(i, j) = gauss(rng);
    return B;
}

void BM_ShiftedFactorize(benchmark::State& state) {
    const Index n = state.range(0);
    const MatrixHandle A = sparse_stable(n, 1u);
    for (auto _ : state) {
        ShiftedFactorization fact(A, ShiftParameter(2.5));
        benchmark::DoNotOptimize(fact.n());
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_ShiftedFactorize)->Arg(1000)->Arg(4000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ShiftedSolve(benchmark::State& state) {
    const Index n = state.range(0);
    const MatrixHandle A = sparse_stable(n, 1u);
    const ShiftedFactorization fact(A, ShiftParameter(2.5));
    const Eigen::MatrixXd rhs = random_block(n, 2, 2u);
    for (auto _ : state) {
        Eigen::MatrixXd x = fact.solve(rhs);
        benchmark::DoNotOptimize(x.data());
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_ShiftedSolve)->Arg(1000)->Arg(4000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_SolverIteration(benchmark::State& state) {
    const Index n = state.range(0);
    const MatrixHandle A = sparse_stable(n, 1u);
    const StableSystem sys = StableSystem::make(A, MatrixHandle::dense(random_block(n, 2, 3u)), true);
    const ShiftedFactorization fact(sys.A, ShiftParameter(2.5));
    FactoredIterate it = cold_start(sys, fact);
    for (auto _ : state) {
        it = step(it, fact, sys);
        if (it.blocks.size() > 30) {
            state.PauseTiming();
            it = compress(it, 1e-10);
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(it.n);
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_SolverIteration)->Arg(1000)->Arg(4000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_ResidualGram(benchmark::State& state) {
    const Index n = 2000;
    const Index blocks = state.range(0);
    const MatrixHandle A = sparse_stable(n, 4u);
    const StableSystem sys = StableSystem::make(A, MatrixHandle::dense(random_block(n, 2, 5u)), true);
    const ShiftedFactorization fact(sys.A, ShiftParameter(2.5));
    FactoredIterate it = cold_start(sys, fact);
    for (Index b = 1; b < blocks; ++b) it = step(it, fact, sys);
    for (auto _ : state) {
        const double r = residual_fnorm(it, sys.A, sys.B);
        benchmark::DoNotOptimize(r);
    }
    state.SetComplexityN(blocks);
}
BENCHMARK(BM_ResidualGram)->Arg(5)->Arg(20)->Arg(60)->Unit(benchmark::kMicrosecond);

void BM_Compress(benchmark::State& state) {
    const Index n = 2000;
    const MatrixHandle A = sparse_stable(n, 6u);
    const StableSystem sys = StableSystem::make(A, MatrixHandle::dense(random_block(n, 2, 7u)), true);
    const ShiftedFactorization fact(sys.A, ShiftParameter(2.5));
    FactoredIterate it = cold_start(sys, fact);
    for (int b = 1; b < 20; ++b) it = step(it, fact, sys);
    for (auto _ : state) {
        FactoredIterate out = compress(it, 1e-10);
        benchmark::DoNotOptimize(out.blocks.size());
    }
}
BENCHMARK(BM_Compress)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
