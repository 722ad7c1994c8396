#include <benchmark/benchmark.h>

#include "fixture.hpp"
#include "plcguard/forest.hpp"
#include "plcguard/lof.hpp"
#include "plcguard/rng.hpp"

using namespace plcguard;

namespace {

void BM_LofScore(benchmark::State& state) {
  const auto& models = *bench::fixture().models;
  const auto rows = bench::fixture().train.features();
  std::vector<detect::Point2> points;
  for (const auto& r : rows) points.push_back(models.embed(r));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(models.lof.score(points[i]));
    i = (i + 1) % points.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LofScore);

void BM_LofScoreByTrainingSize(benchmark::State& state) {
  SplitRng rng(5);
  std::vector<detect::Point2> train(static_cast<std::size_t>(state.range(0)));
  for (auto& p : train) p = {uniform01(rng), uniform01(rng)};
  const auto model = detect::LofModel::fit(train, 20);
  std::vector<detect::Point2> queries(1024);
  for (auto& p : queries) p = {uniform01(rng), uniform01(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.score(queries[i]));
    i = (i + 1) % queries.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LofScoreByTrainingSize)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

void BM_Classify(benchmark::State& state) {
  const auto& models = *bench::fixture().models;
  std::vector<std::vector<double>> rows;
  for (const auto& r : bench::fixture().train.rows)
    if (r.label && *r.label != Label::Normal) rows.push_back(models.classifier_row(r.observation.features));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect::classify(models.forest, rows[i]));
    i = (i + 1) % rows.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Classify);

}  // namespace
