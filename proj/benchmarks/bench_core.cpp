#include <benchmark/benchmark.h>

#include "hhca/bifurcation.hpp"
#include "hhca/phaseplane.hpp"
#include "hhca/system.hpp"

using namespace hhca;

static void BM_ReducedRhs(benchmark::State& st) {
    ModelParams p = hh_calcium();
    double V = -20;
    for (auto _ : st) {
        auto d = reduced_rhs({V, 0.3}, p);
        benchmark::DoNotOptimize(d);
        V += 1e-9;
    }
}
BENCHMARK(BM_ReducedRhs);

static void BM_FullRhs(benchmark::State& st) {
    ModelParams p = hh_calcium();
    for (auto _ : st) benchmark::DoNotOptimize(full_rhs({-20, 0.3, 0.1, 0.6}, p));
}
BENCHMARK(BM_FullRhs);

static void BM_StepResponse(benchmark::State& st) {
    ModelSpec m = preset("hh-calcium");
    m.kind = st.range(0) ? ModelKind::full : ModelKind::reduced;
    StimulusProtocol p;
    p.step = StepInput{12.0, 100.0, 400.0};
    IntegratorOptions o;
    o.output_dt = 0.05;
    auto s0 = resting_state(m);
    for (auto _ : st) benchmark::DoNotOptimize(simulate(m, s0, 0, 500, p, o));
}
BENCHMARK(BM_StepResponse)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_HybridBurst(benchmark::State& st) {
    ModelSpec m = preset("tc-high-ca");
    StimulusProtocol p;
    p.baseline = -5;
    p.step = StepInput{90.0, 100.0, 300.0};
    auto s0 = resting_state(m, -5);
    for (auto _ : st) benchmark::DoNotOptimize(simulate(m, s0, 0, 400, p, IntegratorOptions{}));
}
BENCHMARK(BM_HybridBurst)->Unit(benchmark::kMillisecond);

static void BM_Nullclines(benchmark::State& st) {
    PlanarField f = reduced_field(hh_calcium());
    NullclineOptions o;
    o.resolution = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(extract_nullclines(f, Box{}, o));
}
BENCHMARK(BM_Nullclines)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_Transcritical(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(detect_transcritical(hh_calcium()));
}
BENCHMARK(BM_Transcritical)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
