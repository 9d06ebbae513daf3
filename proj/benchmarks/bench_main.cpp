/// Timings of the hot paths: a single loop, a full scaling batch, the
/// Melnikov profile and the barrier construction.

#include "homloop/loopmap.hpp"
#include "homloop/melnikov.hpp"
#include "homloop/scaling.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace homloop;

struct Fixture {
    PiecewiseSystem sys = builtin::duffing();
    Homoclinic gamma = homoclinic_orbit(sys);
    LeafAnchors anchors{sys, gamma, 40.0};
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_LoopForward(benchmark::State& state) {
    const double d = std::pow(10.0, -static_cast<double>(state.range(0)));
    const LoopMap map(fixture().anchors, 0.0125);
    for (auto _ : state) benchmark::DoNotOptimize(map.forward(d, 0.0));
}
BENCHMARK(BM_LoopForward)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ScalingBatch(benchmark::State& state) {
    const LoopMap map(fixture().anchors, 0.0125);
    const std::vector<double> grid{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    const RateConstants rates = rate_constants(fixture().gamma.spectrum());
    for (auto _ : state) {
        const auto batch = loop_batch(map, grid, {0.0}, true, true);
        benchmark::DoNotOptimize(fit_exponents(batch, rates, 1.0 / 16.0));
    }
}
BENCHMARK(BM_ScalingBatch)->Unit(benchmark::kMillisecond);

void BM_MelnikovProfile(benchmark::State& state) {
    const PiecewiseSystem sys = builtin::duffing(perturbations::x_cos(), 0.0);
    const Homoclinic gamma = homoclinic_orbit(sys);
    const Melnikov mel(sys, gamma);
    const auto alphas = default_alpha_grid(sys, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mel.profile(alphas));
}
BENCHMARK(BM_MelnikovProfile)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Barriers(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(build_barriers(fixture().sys, 0.05, 1.0 / 32.0, fixture().anchors));
}
BENCHMARK(BM_Barriers)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
