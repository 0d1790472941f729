#include "sparsecox/dantzig.hpp"
#include "sparsecox/kernels.hpp"
#include "sparsecox/simulation.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace sparsecox;

namespace {

SurvivalDataset make_data(Index n, Index p) {
  GeneratorConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.seed = 7;
  return generate(cfg).data;
}

Vector make_beta(Index p) {
  Vector b = Vector::Zero(p);
  b[0] = 1.0;
  b[1] = -1.0;
  return b;
}

void BM_ReferenceHessian(benchmark::State& state) {
  const auto ds = make_data(state.range(0), state.range(1));
  const Vector beta = make_beta(ds.p());
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference_evaluate(ds, beta, true));
}

void BM_SerialHessian(benchmark::State& state) {
  const auto ds = make_data(state.range(0), state.range(1));
  const Vector beta = make_beta(ds.p());
  const auto cols = kernels::all_indices(ds.p());
  for (auto _ : state) {
    const auto sw = kernels::make_sweep(ds, beta);
    const Matrix m = kernels::event_means_serial(ds, sw, cols);
    benchmark::DoNotOptimize(kernels::hessian_block_serial(ds, sw, cols, m, cols, m));
  }
}

void BM_ParallelHessian(benchmark::State& state) {
  const auto ds = make_data(state.range(0), state.range(1));
  const Vector beta = make_beta(ds.p());
  const auto cols = kernels::all_indices(ds.p());
  omp_set_num_threads(static_cast<int>(state.range(2)));
  for (auto _ : state) {
    const auto sw = kernels::make_sweep(ds, beta);
    const Matrix m = kernels::event_means(ds, sw, cols);
    benchmark::DoNotOptimize(kernels::hessian_block(ds, sw, cols, m, cols, m));
  }
  omp_set_num_threads(omp_get_num_procs());
}

void BM_DantzigFit(benchmark::State& state) {
  const auto ds = make_data(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(fit_dantzig(ds, TuningSchedule{}));
}

}  // namespace

BENCHMARK(BM_ReferenceHessian)->Args({100, 10})->Args({400, 50})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SerialHessian)->Args({100, 10})->Args({400, 50})->Args({400, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParallelHessian)
    ->Args({400, 50, 1})
    ->Args({400, 500, 1})
    ->Args({400, 500, 2})
    ->Args({400, 500, 4})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DantzigFit)->Args({200, 50})->Args({400, 50})->Args({200, 1000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
