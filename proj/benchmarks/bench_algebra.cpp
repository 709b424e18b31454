#include <benchmark/benchmark.h>

#include "spinflow/model.hpp"
#include "spinflow/pauli.hpp"
#include "spinflow/rng.hpp"

namespace {

using namespace spinflow;

OperatorSum random_sum(int L, int terms, std::uint64_t key) {
    OperatorSum out(L);
    RngStream rng(key);
    for (int t = 0; t < terms; ++t) {
        std::uint64_t active = rng.next_u64() & ((1ull << L) - 1ull);
        int lo = 1 + static_cast<int>(rng.next_u64() % L);
        int hi = std::min(L, lo + 2);
        Interval I = mask_hull(active).hull(Interval{lo, hi});
        std::vector<cplx> tab(1ull << I.size());
        for (auto& v : tab) v = rng.next_uniform(-1, 1);
        out.add_term(XMonomial(L, active, I, std::move(tab)));
    }
    return out;
}

void BM_commutator(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    OperatorSum a = random_sum(L, 30, 1);
    OperatorSum b = random_sum(L, 60, 2);
    for (auto _ : state) benchmark::DoNotOptimize(commutator(a, b));
}

void BM_to_dense(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    OperatorSum a = random_sum(L, 60, 3);
    for (auto _ : state) benchmark::DoNotOptimize(to_dense(a));
}

void BM_split_bare(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    ModelParams p = ModelParams::with_random_kappa(L, 0.05, 1.0, 3, Ensemble::random, 1);
    DisorderSample s = sample_disorder(p, 0);
    for (auto _ : state) benchmark::DoNotOptimize(split_bare(p, s));
}

}  // namespace

BENCHMARK(BM_commutator)->Arg(4)->Arg(6)->Arg(8);
BENCHMARK(BM_to_dense)->Arg(6)->Arg(8);
BENCHMARK(BM_split_bare)->Arg(6)->Arg(8);
