// Serial reference kernels against their OpenMP versions. Thread count follows
// OMP_NUM_THREADS; the results of both variants are bit-identical, so only
// time differs.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/rng.hpp"
#include "mlmem/trainer.hpp"

using namespace mlmem;

namespace {

struct Fixture {
  desk::DeskData data;
  ModelSpec spec;
  Layout layout;
  ParameterVector params;
  std::vector<std::size_t> batch;

  Fixture() {
    desk::DeskDatasetSpec s;
    s.n = 2000;
    s.classes = 10;
    data = desk::synth_data(s);
    spec = {Architecture::Mlp, data.train.dim(), 10, {64}};
    layout = layout_of(spec);
    params = initialize_parameters(spec, 1);
    batch.resize(256);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

template <auto Kernel>
void BM_BatchGradient(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> grad(f.layout.size);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(f.spec, f.layout, f.params.span(), f.data.train, f.batch, grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

template <auto Kernel>
void BM_PredictLabels(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<int> out(f.data.test.size());
  for (auto _ : state) {
    Kernel(f.spec, f.layout, f.params.span(), f.data.test, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

// 100 documents x 100 slots against a 1000-word table of 20-dim vectors.
template <auto Kernel>
void BM_CorrelationSearch(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> table(1000 * kTokenVectorDim), segments(10000 * kTokenVectorDim);
  for (auto& v : table) v = rng.normal();
  for (auto& v : segments) v = rng.normal();
  std::vector<kernels::SlotMatch> out(10000);
  for (auto _ : state) {
    Kernel(segments, table, kTokenVectorDim, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

template <auto Kernel>
void BM_RandomizeLowBits(benchmark::State& state) {
  std::vector<float> params(1 << 20, 0.5f);
  for (auto _ : state) {
    Kernel(params, 16, 7);
    benchmark::DoNotOptimize(params.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(params.size()));
}

template <auto Kernel>
void BM_Histogram(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> values(1 << 20);
  for (auto& v : values) v = rng.normal();
  std::vector<std::uint64_t> counts(201);
  for (auto _ : state) {
    std::fill(counts.begin(), counts.end(), 0);
    Kernel(values, -5.0, 5.0, counts);
    benchmark::DoNotOptimize(counts.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(values.size()));
}

}  // namespace

BENCHMARK(BM_BatchGradient<kernels::serial::batch_gradient>)->Name("batch_gradient/serial")->UseRealTime();
BENCHMARK(BM_BatchGradient<kernels::omp::batch_gradient>)->Name("batch_gradient/omp")->UseRealTime();
BENCHMARK(BM_PredictLabels<kernels::serial::predict_labels>)->Name("predict_labels/serial")->UseRealTime();
BENCHMARK(BM_PredictLabels<kernels::omp::predict_labels>)->Name("predict_labels/omp")->UseRealTime();
BENCHMARK(BM_CorrelationSearch<kernels::serial::correlation_search>)->Name("correlation_search/serial")->UseRealTime();
BENCHMARK(BM_CorrelationSearch<kernels::omp::correlation_search>)->Name("correlation_search/omp")->UseRealTime();
BENCHMARK(BM_RandomizeLowBits<kernels::serial::randomize_low_bits>)->Name("randomize_low_bits/serial")->UseRealTime();
BENCHMARK(BM_RandomizeLowBits<kernels::omp::randomize_low_bits>)->Name("randomize_low_bits/omp")->UseRealTime();
BENCHMARK(BM_Histogram<kernels::serial::histogram>)->Name("histogram/serial")->UseRealTime();
BENCHMARK(BM_Histogram<kernels::omp::histogram>)->Name("histogram/omp")->UseRealTime();

BENCHMARK_MAIN();
