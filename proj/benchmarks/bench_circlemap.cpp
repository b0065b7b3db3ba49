#include <benchmark/benchmark.h>

#include "chronostim/circlemap.hpp"
#include "chronostim/telemetry.hpp"
#include "chronostim/tongues.hpp"

namespace {

using namespace chronostim;

void BM_WindingNumber(benchmark::State& state) {
    circlemap::CircleMapConfig cfg;
    cfg.natural_hz = 13.0;
    cfg.stim_hz = 17.0;
    cfg.coupling = 0.8;
    cfg.n_pulses = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto est = circlemap::winding_number(cfg);
        benchmark::DoNotOptimize(est.mean);
    }
}
BENCHMARK(BM_WindingNumber)->Arg(50)->Arg(200);

void BM_SweepRow(benchmark::State& state) {
    tongues::GridSpec spec;
    spec.mode = tongues::GridMode::StimVsAmplitude;
    spec.x = {6.0, 30.0, static_cast<int>(state.range(0))};
    spec.y = {0.5, 0.5, 1};
    spec.fixed_hz = 13.0;
    for (auto _ : state) {
        auto grid = tongues::sweep(spec);
        benchmark::DoNotOptimize(grid.winding.data());
    }
}
BENCHMARK(BM_SweepRow)->Arg(241);

void BM_SweepParallel(benchmark::State& state) {
    tongues::GridSpec spec;
    spec.mode = tongues::GridMode::StimVsAmplitude;
    spec.x = {6.0, 30.0, 121};
    spec.y = {0.0, 1.0, 21};
    spec.fixed_hz = 13.0;
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto grid = tongues::sweep(spec, workers);
        benchmark::DoNotOptimize(grid.winding.data());
    }
}
BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_WelchPsd(benchmark::State& state) {
    const auto ts = telemetry::synth_lfp(telemetry::restful_spec(), 8.0, 250.0, 1);
    for (auto _ : state) {
        auto ps = telemetry::welch_psd(ts, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(ps.power.data());
    }
}
BENCHMARK(BM_WelchPsd)->Arg(256)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
