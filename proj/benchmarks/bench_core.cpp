#include <benchmark/benchmark.h>

#include <vector>

#include "metastab/critical_points.hpp"
#include "metastab/dynamics.hpp"
#include "metastab/measures.hpp"
#include "metastab/tridiagonal.hpp"

using namespace metastab;

namespace {

SystemParams params_for(benchmark::State& state) {
    SystemParams p;
    p.n = static_cast<std::size_t>(state.range(0));
    p.beta = 12.0;
    return p;
}

LatticeState thermal(const SystemParams& p) {
    std::vector<double> one(p.n, 1.0);
    auto minimum = find_minimizer(p, one);
    EnsembleSpec spec;
    spec.params = p;
    return CanonicalSampler(spec, minimum, hessian_spectrum(p, minimum.u, true)).draw(0).state;
}

void BM_Force(benchmark::State& state) {
    const auto p = params_for(state);
    const auto s = thermal(p);
    std::vector<double> f(p.n);
    for (auto _ : state) {
        force_into(p, s.u, f);
        benchmark::DoNotOptimize(f.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(p.n));
}
BENCHMARK(BM_Force)->Arg(128)->Arg(1024);

void BM_VerletStep(benchmark::State& state) {
    const auto p = params_for(state);
    auto s = thermal(p);
    const double dt = recommended_dt(p);
    for (auto _ : state) {
        s = verlet_step(p, s, dt);
        benchmark::DoNotOptimize(s.u.data());
    }
}
BENCHMARK(BM_VerletStep)->Arg(128)->Arg(1024);

void BM_Integrate1000Steps(benchmark::State& state) {
    const auto p = params_for(state);
    const auto s = thermal(p);
    IntegratorConfig cfg;
    cfg.dt = recommended_dt(p);
    cfg.horizon = 1000 * cfg.dt;
    cfg.cadence = 1000;
    for (auto _ : state) {
        auto out = integrate(p, s, cfg);
        benchmark::DoNotOptimize(out.final_state.u.data());
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Integrate1000Steps)->Arg(128)->Arg(1024);

void BM_Eigenvalues(benchmark::State& state) {
    const auto p = params_for(state);
    std::vector<double> one(p.n, 1.0);
    const auto op = hessian_operator(p, one);
    for (auto _ : state) benchmark::DoNotOptimize(tridiagonal_eigenvalues(op));
}
BENCHMARK(BM_Eigenvalues)->Arg(128)->Arg(1024);

void BM_Eigensystem(benchmark::State& state) {
    const auto p = params_for(state);
    std::vector<double> one(p.n, 1.0);
    const auto op = hessian_operator(p, one);
    for (auto _ : state) benchmark::DoNotOptimize(tridiagonal_eigensystem(op));
}
BENCHMARK(BM_Eigensystem)->Arg(128)->Arg(512);

void BM_CanonicalDraw(benchmark::State& state) {
    const auto p = params_for(state);
    std::vector<double> one(p.n, 1.0);
    auto minimum = find_minimizer(p, one);
    EnsembleSpec spec;
    spec.params = p;
    spec.count = 1 << 20;
    CanonicalSampler sampler(spec, minimum, hessian_spectrum(p, minimum.u, true));
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(i++));
}
BENCHMARK(BM_CanonicalDraw)->Arg(128)->Arg(1024);

void BM_FindSaddleKink(benchmark::State& state) {
    auto p = params_for(state);
    p.delta = 0.1;
    for (auto _ : state) benchmark::DoNotOptimize(find_saddle(p));
}
BENCHMARK(BM_FindSaddleKink)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
