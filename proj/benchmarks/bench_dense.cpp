#include <benchmark/benchmark.h>

#include "spinflow/liom.hpp"
#include "spinflow/oracle.hpp"
#include "spinflow/rng.hpp"

namespace {

using namespace spinflow;

DenseMatrix random_hermitian(int dim, std::uint64_t key) {
    RngStream rng(key);
    DenseMatrix A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
    return 0.5 * (A + A.adjoint());
}

void BM_dense_spectrum(benchmark::State& state) {
    int dim = static_cast<int>(state.range(0));
    DenseOperator op{random_hermitian(dim, 1), true};
    for (auto _ : state) benchmark::DoNotOptimize(dense_spectrum(op));
}

void BM_partial_trace(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    DenseMatrix M = random_hermitian(1 << L, 2);
    std::uint64_t keep = 0b0110;  // a middle window
    for (auto _ : state) benchmark::DoNotOptimize(normalized_partial_trace(M, keep, L));
}

void BM_spectral_lemma_trial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(spectral_lemma_check(20, 0.05, 10));
}

}  // namespace

BENCHMARK(BM_dense_spectrum)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_partial_trace)->Arg(6)->Arg(8);
BENCHMARK(BM_spectral_lemma_trial)->Unit(benchmark::kMillisecond);
