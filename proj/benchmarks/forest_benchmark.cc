#include <vector>

#include <benchmark/benchmark.h>

#include "rct/embedding_fusion.h"
#include "rct/random_forest.h"
#include "rct/rng.h"

namespace {

struct Data {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Data make_data(std::size_t n, std::size_t d) {
  rct::Rng rng(9);
  Data data{Eigen::MatrixXd(n, d), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = rng.uniform() < 0.35 ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j) data.X(i, j) = rng.normal() + (j % 4 == 0 ? label : 0.0);
    data.y.push_back(label);
  }
  return data;
}

void BM_ForestFit(benchmark::State& state) {
  const auto data = make_data(state.range(0), 35);
  rct::RFConfig cfg;
  cfg.n_trees = 50;
  for (auto _ : state) benchmark::DoNotOptimize(rct::fit_forest(data.X, data.y, cfg));
}
BENCHMARK(BM_ForestFit)->Arg(455)->Arg(1440)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& state) {
  const auto data = make_data(1440, 35);
  rct::RFConfig cfg;
  cfg.n_trees = 200;
  const auto forest = rct::fit_forest(data.X, data.y, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(forest.predict_proba(data.X));
}
BENCHMARK(BM_ForestPredict)->Unit(benchmark::kMillisecond);

void BM_PcaFit(benchmark::State& state) {
  const auto data = make_data(1440, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rct::fit_pca(data.X, 5));
}
BENCHMARK(BM_PcaFit)->Arg(32)->Arg(64);

}  // namespace
