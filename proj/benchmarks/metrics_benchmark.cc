#include <benchmark/benchmark.h>

#include "rct/metrics.h"
#include "rct/rng.h"

namespace {

rct::ScoredSet make_set(std::size_t n) {
  rct::Rng rng(5);
  rct::ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.uniform() < 0.3 ? 1 : 0;
    s.labels.push_back(y);
    s.scores.push_back(0.3 * y + 0.7 * rng.uniform());
  }
  return s;
}

void BM_RocAuc(benchmark::State& state) {
  const auto s = make_set(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rct::roc_auc(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(8)->Range(512, 1 << 18)->Complexity(benchmark::oNLogN);

void BM_PrAuc(benchmark::State& state) {
  const auto s = make_set(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rct::pr_auc(s));
}
BENCHMARK(BM_PrAuc)->Arg(1 << 14);

void BM_Calibrate(benchmark::State& state) {
  const auto s = make_set(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rct::calibrate_threshold(s, 0.8));
}
BENCHMARK(BM_Calibrate)->Arg(1 << 14);

}  // namespace

BENCHMARK_MAIN();
