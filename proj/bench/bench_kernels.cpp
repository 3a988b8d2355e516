#include <random>

#include <benchmark/benchmark.h>

#include "clickmask/kernels.hpp"
#include "clickmask/levelset.hpp"
#include "clickmask/synth.hpp"

using namespace clickmask;

namespace {

ScalarField random_phi(int n)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    ScalarField f(n, n);
    for (auto& v : f.values())
        v = u(rng);
    return f;
}

template <bool Parallel>
void force_terms(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const ScalarField phi = random_phi(n);
    const ScalarField edge(n, n, 0.7);
    kernels::ForceParams fp;
    fp.area = -1.5;
    fp.ed = 0.04;
    kernels::Workspace ws;
    kernels::ForceTerms terms;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::force_terms(phi, edge, fp, ws, terms);
        else
            kernels::serial::force_terms(phi, edge, fp, ws, terms);
        benchmark::DoNotOptimize(terms.ed.values().data());
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void gradient(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const ScalarField phi = random_phi(n);
    ScalarField gx, gy;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::gradient(phi, gx, gy);
        else
            kernels::serial::gradient(phi, gx, gy);
        benchmark::DoNotOptimize(gx.values().data());
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}

void evolve_roi(benchmark::State& state)
{
    synth::PhantomSpec spec;
    spec.background = 0.1;
    spec.noise_sigma = 0.02;
    spec.seed = 1;
    spec.targets.push_back({64, 64, 4, 0.8, synth::Profile::disk});
    const synth::Phantom p = synth::generate(spec);
    const Backend backend = state.range(0) ? Backend::parallel : Backend::serial;
    for (auto _ : state) {
        const EvolutionResult r = evolve(p.image, EvolutionParams{}, backend);
        benchmark::DoNotOptimize(r.iterations);
    }
}

}  // namespace

BENCHMARK(force_terms<false>)->Name("force_terms/serial")->Arg(128)->Arg(512);
BENCHMARK(force_terms<true>)->Name("force_terms/parallel")->Arg(128)->Arg(512);
BENCHMARK(gradient<false>)->Name("gradient/serial")->Arg(128)->Arg(512);
BENCHMARK(gradient<true>)->Name("gradient/parallel")->Arg(128)->Arg(512);
BENCHMARK(evolve_roi)->Name("evolve_128/backend")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
