// Serial reference vs OpenMP kernels. Both produce bit-identical output; only time differs.

#include "cchedge/hedging.hpp"
#include "cchedge/scenarios.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace cchedge;

namespace {

const SvcjParams kWorld{{0.75, 0.38, 0.83, 0.28, 0.30}, 0.85, -0.30, 0.0, 0.99, 0.0};

void BM_SvcjSerial(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(simulate_svcj_serial(kWorld, 8000.0, 0.0, n, 90, 1.0 / 365.0, 1));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_SvcjParallel(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(simulate_svcj(kWorld, 8000.0, 0.0, n, 90, 1.0 / 365.0, 1));
    st.SetItemsProcessed(st.iterations() * st.range(0));
    st.counters["threads"] = omp_get_max_threads();
}

GarchFit toy_fit() {
    GarchFit f;
    f.omega = 1e-5;
    f.alpha = 0.1;
    f.beta = 0.85;
    f.next_variance = 2e-4;
    for (int i = 0; i < 500; ++i) f.residuals.push_back(((i * 37) % 101 - 50) / 29.0);
    return f;
}

void BM_GarchKdeSerial(benchmark::State& st) {
    const GarchFit f = toy_fit();
    const KdeSampler k{f.residuals, 0.2};
    const auto n = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(simulate_garch_kde_serial(f, k, 8000.0, n, 90, 1));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_GarchKdeParallel(benchmark::State& st) {
    const GarchFit f = toy_fit();
    const KdeSampler k{f.residuals, 0.2};
    const auto n = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(simulate_garch_kde(f, k, 8000.0, n, 90, 1));
    st.SetItemsProcessed(st.iterations() * st.range(0));
    st.counters["threads"] = omp_get_max_threads();
}

HedgeSpec sv_vega_spec() {
    HedgeSpec s;
    s.strategy = Strategy::DeltaVega;
    s.hedge_model = {SvParams{1.6, 1.10, 0.68, 0.17, 0.35}, 0.0, 8000.0};
    s.target = {8000.0, 30.0 / 365.0, true};
    s.second = default_second_instrument(s.target);
    return s;
}

void BM_HedgeSerial(benchmark::State& st) {
    const PathMatrix pm = simulate_svcj(kWorld, 8000.0, 0.0, static_cast<std::size_t>(st.range(0)), 30, 1.0 / 365.0, 2);
    const HedgeSpec spec = sv_vega_spec();
    for (auto _ : st) benchmark::DoNotOptimize(run_hedge_experiment_serial(pm, spec, {}));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_HedgeParallel(benchmark::State& st) {
    const PathMatrix pm = simulate_svcj(kWorld, 8000.0, 0.0, static_cast<std::size_t>(st.range(0)), 30, 1.0 / 365.0, 2);
    const HedgeSpec spec = sv_vega_spec();
    for (auto _ : st) benchmark::DoNotOptimize(run_hedge_experiment(pm, spec, {}));
    st.SetItemsProcessed(st.iterations() * st.range(0));
    st.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_SvcjSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SvcjParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GarchKdeSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GarchKdeParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HedgeSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HedgeParallel)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
