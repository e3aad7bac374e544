#include <benchmark/benchmark.h>

#include "lps/fluid.hpp"
#include "lps/heavy_traffic.hpp"
#include "lps/renewal.hpp"
#include "lps/rng.hpp"
#include "lps/simulator.hpp"

using namespace lps;

namespace {

Measure random_atoms(RngStream& rng, int n) {
    Measure m;
    for (int i = 0; i < n; ++i) m.add_atom(5.0 * rng.uniform(), 0.1 + rng.uniform());
    m.finalize();
    return m;
}

void BM_ProhorovDistance(benchmark::State& state) {
    RngStream rng(1);
    int n = static_cast<int>(state.range(0));
    Measure a = random_atoms(rng, n);
    Measure b = random_atoms(rng, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(prohorov_distance(a, b, 1e-4));
    }
}
BENCHMARK(BM_ProhorovDistance)->Arg(8)->Arg(32)->Arg(128);

void BM_KeyEquationSolve(benchmark::State& state) {
    auto spec = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    double K = 2.0, beta = spec.beta();
    auto init = lift(1.3 * K * spec.beta_e(), K, spec);
    double u_max = static_cast<double>(state.range(0)) * beta;
    auto h = h_from_initial(init, u_max, beta / 200.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_key_equation(h, spec, K, init.w));
    }
}
BENCHMARK(BM_KeyEquationSolve)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_RenewalFunction(benchmark::State& state) {
    auto spec = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    double beta = spec.beta();
    double u_max = static_cast<double>(state.range(0)) * beta;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            renewal_function([&spec](double x) { return spec.cdf(x); }, u_max,
                             beta / 200.0, false));
    }
}
BENCHMARK(BM_RenewalFunction)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_Simulator(benchmark::State& state) {
    auto cfg = LpsConfig(DistributionSpec::exponential(0.9), DistributionSpec::exponential(1.0));
    cfg.K = static_cast<int>(state.range(0));
    cfg.horizon = 10000.0;
    cfg.seed = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(cfg));
    }
}
BENCHMARK(BM_Simulator)->Arg(1)->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_RbmPath(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_rbm(1.0, 2.0, 1.0, 100.0, 1e-3, 3));
    }
}
BENCHMARK(BM_RbmPath)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
