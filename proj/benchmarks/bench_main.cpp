#include "dmps/datasets.hpp"
#include "dmps/kernel.hpp"
#include "dmps/ot.hpp"
#include "dmps/samplers.hpp"
#include "dmps/spectral.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace dmps;

namespace {

const DiffusionModel& model_for(Index n) {
  static std::map<Index, DiffusionModel> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    const SampleMatrix z = sample_hypersemisphere(n, 3, 1);
    it = cache.emplace(n, DiffusionModel::fit(z, median_bandwidth(z))).first;
  }
  return it->second;
}

SampleMatrix particles(Index m) { return sample_hypersemisphere(m, 3, 2); }

void BM_Fit(benchmark::State& state) {
  const SampleMatrix z = sample_hypersemisphere(state.range(0), 3, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(DiffusionModel::fit(z, median_bandwidth(z)));
  }
}
BENCHMARK(BM_Fit)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_KernelRows(benchmark::State& state) {
  const DiffusionModel& m = model_for(1000);
  const SampleMatrix x = particles(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.kernel().rows(x.data(), true));
  }
}
BENCHMARK(BM_KernelRows)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_DriftField(benchmark::State& state) {
  const DiffusionModel& m = model_for(1000);
  const SampleMatrix x = particles(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(drift_field(m, x));
  }
}
BENCHMARK(BM_DriftField)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const DiffusionModel& m = model_for(1000);
  const SampleMatrix x = particles(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_at(m, x.data()));
  }
}
BENCHMARK(BM_Score)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Sinkhorn(benchmark::State& state) {
  const SampleMatrix a = particles(state.range(0));
  const SampleMatrix b = sample_hypersemisphere(state.range(1), 3, 3);
  OTConfig cfg;
  cfg.cost = CostKind::SqEuclidean;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinkhorn_distance(a, b, cfg));
  }
}
BENCHMARK(BM_Sinkhorn)->Args({300, 2000})->Args({300, 20000})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
