#include <benchmark/benchmark.h>

#include "fixture.hpp"
#include "plcguard/relay.hpp"
#include "plcguard/simlab/scenario.hpp"

using namespace plcguard;

namespace {

// Scoring cost per client message, without sockets.
void BM_Mediate(benchmark::State& state) {
  simlab::ScenarioSpec spec;
  spec.duration_s = 120.0;
  spec.rng_seed = 9;
  const auto trace = simlab::gen_traffic(spec);
  auto mediator = std::make_unique<relay::Mediator>(bench::fixture().models);
  std::size_t i = 0;
  for (auto _ : state) {
    if (i == trace.size()) {
      state.PauseTiming();
      mediator = std::make_unique<relay::Mediator>(bench::fixture().models);
      i = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(mediator->mediate(trace[i].meta, trace[i].payload));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Mediate);

}  // namespace
