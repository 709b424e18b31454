#include <benchmark/benchmark.h>

#include "spinflow/diagrams.hpp"
#include "spinflow/flow.hpp"
#include "spinflow/model.hpp"

namespace {

using namespace spinflow;

FlowParams desk_flow(double gamma) {
    FlowParams fp;
    fp.beta = Rational(9, 10);
    fp.resolve(gamma);
    return fp;
}

void BM_flow_step(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    ModelParams p = ModelParams::with_random_kappa(L, 0.05, 1.0, 3, Ensemble::random, 1);
    FlowParams fp = desk_flow(p.gamma);
    ScaleLadder ladder(fp.beta);
    FlowState st0 = initial_state(p, sample_disorder(p, 0));
    for (auto _ : state) {
        FlowState st = st0;
        GeneratorResult gen = solve_generator(st, select_perturbative(st, ladder), fp);
        rotate_step(st, gen.A, fp);
        benchmark::DoNotOptimize(st);
    }
}

void BM_full_flow(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    ModelParams p = ModelParams::with_random_kappa(L, 0.05, 1.0, 3, Ensemble::random, 1);
    FlowParams fp = desk_flow(p.gamma);
    for (auto _ : state) benchmark::DoNotOptimize(run_flow(p, sample_disorder(p, 1), fp));
}

void BM_census(benchmark::State& state) {
    int L = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(enumerate_diagrams(L, 1, L + 2, Rational(9, 10)));
}

}  // namespace

BENCHMARK(BM_flow_step)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_full_flow)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_census)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
