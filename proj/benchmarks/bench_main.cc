#include <benchmark/benchmark.h>

#include "tcdiag/exact_oracle.h"
#include "tcdiag/loop_exact.h"
#include "tcdiag/spin_mc.h"

using namespace tcdiag;

static void BM_Sweep(benchmark::State &state) {
    MCConfig c;
    c.L = (int)state.range(0);
    c.n = (int)state.range(1);
    c.p = 0.15;
    std::mt19937_64 rng(7);
    auto sys = initial_system(c, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metropolis_sweep(sys, rng));
    }
    state.SetItemsProcessed(state.iterations() * sys.num_sites() * sys.flavors);
}
BENCHMARK(BM_Sweep)->Args({16, 2})->Args({16, 4})->Args({32, 3})->Args({64, 3});

static void BM_LoopMoment(benchmark::State &state) {
    auto code = build_code((int)state.range(0));
    ErrorModel model(0.1, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(moment_via_loops(code, model, (int)state.range(1)));
    }
}
BENCHMARK(BM_LoopMoment)->Args({3, 2})->Args({3, 3})->Args({4, 2})->Unit(benchmark::kMillisecond);

static void BM_DenseChannel(benchmark::State &state) {
    auto code = build_code(2);
    auto rho0 = build_rho0(code, Rho0Variant::MaxMixedLogical);
    ErrorModel model(0.1, 0.1);
    for (auto _ : state) {
        auto rho = apply_channel(rho0, model);
        benchmark::DoNotOptimize(rho.rho(0, 0));
    }
}
BENCHMARK(BM_DenseChannel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
