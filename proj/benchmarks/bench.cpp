#include <benchmark/benchmark.h>

#include "mrtnet/estimators.hpp"
#include "mrtnet/meanfield.hpp"
#include "mrtnet/oracle.hpp"
#include "mrtnet/simulate.hpp"

using namespace mrtnet;

namespace {

ModelSpec bench_model() { return ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.005); }

void BM_SimulateSparse(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = gen_erdos_renyi(n, 10.0 / n, 1);
    const auto m = build_activation(bench_model(), g);
    const auto pi = PolicyVector::uniform(n, 0.5);
    const long T = 1000;
    std::uint64_t rep = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(g, m, pi, T, 7, InitSpec::iid(0.5), rep++));
    }
    state.SetItemsProcessed(state.iterations() * T * n);
}
BENCHMARK(BM_SimulateSparse)->Arg(100)->Arg(1000);

void BM_SimulateComplete(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = gen_erdos_renyi(n, 1.0, 0);
    const auto m = build_activation(ModelSpec::affine_abcd(0.1, 0.2, 0.3, 0.1, 0.2 / (n - 1)), g);
    const auto pi = PolicyVector::uniform(n, 0.5);
    const long T = 1000;
    std::uint64_t rep = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(g, m, pi, T, 7, InitSpec::iid(0.5), rep++));
    }
    state.SetItemsProcessed(state.iterations() * T * n);
}
BENCHMARK(BM_SimulateComplete)->Arg(200);

void BM_MeanFieldSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = gen_erdos_renyi(n, 10.0 / n, 3);
    const auto m = build_activation(bench_model(), g);
    const auto pi = PolicyVector::uniform(n, 0.5);
    const auto rep = assumption_constants(m, g);
    FixedPointOptions opts;
    opts.report = &rep;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mf_fixed_point(g, m, pi, opts));
    }
}
BENCHMARK(BM_MeanFieldSolve)->Arg(400)->Arg(4000);

void BM_OracleSweep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = gen_erdos_renyi(n, 0.4, 5);
    const auto m = build_activation(bench_model(), g);
    const auto pi = PolicyVector::uniform(n, 0.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_stationary(g, m, pi));
    }
}
BENCHMARK(BM_OracleSweep)->Arg(8)->Arg(10);

void BM_LdeHat(benchmark::State& state) {
    const int n = 20;
    const auto g = gen_erdos_renyi(n, 0.2, 9);
    const auto m = build_activation(bench_model(), g);
    const auto pi = PolicyVector::uniform(n, 0.5);
    const auto traj = simulate(g, m, pi, 50000, 11, InitSpec::iid(0.5));
    for (auto _ : state) {
        benchmark::DoNotOptimize(lde_hat(traj, 0.7, 0.3));
    }
    state.SetItemsProcessed(state.iterations() * traj.T * n);
}
BENCHMARK(BM_LdeHat);

} // namespace

BENCHMARK_MAIN();
