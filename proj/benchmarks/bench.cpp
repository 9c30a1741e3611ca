#include <benchmark/benchmark.h>

#include "nlsa/modulation.hpp"
#include "nlsa/spectral.hpp"
#include "nlsa/threshold.hpp"
#include "nlsa/virial.hpp"

using namespace nlsa;

namespace {

const PhysParams kP{-0.04};

const GroundState& gs512() {
    static const GroundState gs = eval_ground_state(kP, build_grid(kP, 512, 200.0));
    return gs;
}

void BM_GroundState(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(eval_ground_state(kP, build_grid(kP, n, 200.0)).E);
}
BENCHMARK(BM_GroundState)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_SectorSpectrum(benchmark::State& st) {
    const auto s = make_sector(build_grid(kP, static_cast<int>(st.range(0)), 200.0), 0);
    const SectorOperator op = assemble_sector_op(s, 5);
    for (auto _ : st) benchmark::DoNotOptimize(sector_spectrum(op, 5).eigenvalues(0));
}
BENCHMARK(BM_SectorSpectrum)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Trichotomy(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(solve_trichotomy(gs512()).e0);
}
BENCHMARK(BM_Trichotomy)->Unit(benchmark::kMillisecond);

void BM_EvolveUnitTime(benchmark::State& st) {
    const RadialField u0(gs512().sector, 0.9 * gs512().W.phi);
    EvolutionControls c;
    c.sample_every = 0.1;
    for (auto _ : st) {
        SimState s = make_state(u0);
        benchmark::DoNotOptimize(evolve(gs512(), s, 1.0, c).steps);
    }
}
BENCHMARK(BM_EvolveUnitTime)->Unit(benchmark::kMillisecond);

void BM_ModulationFit(benchmark::State& st) {
    const RadialField u = scaled_W(gs512(), 0.4, 1.7);
    for (auto _ : st) benchmark::DoNotOptimize(fit_modulation(gs512(), u).mu);
}
BENCHMARK(BM_ModulationFit)->Unit(benchmark::kMicrosecond);

void BM_VirialSample(benchmark::State& st) {
    const RadialField u(gs512().sector, 1.01 * gs512().W.phi);
    for (auto _ : st) benchmark::DoNotOptimize(virial_sample(gs512(), u, 5.0).dttVR);
}
BENCHMARK(BM_VirialSample)->Unit(benchmark::kMicrosecond);

void BM_LpSolve(benchmark::State& st) {
    static const ThresholdSetup s = make_threshold_setup(gs512());
    for (auto _ : st) benchmark::DoNotOptimize(lp_solve(s, 5e-3).y0_plus);
}
BENCHMARK(BM_LpSolve)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
