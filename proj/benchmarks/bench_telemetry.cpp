#include <benchmark/benchmark.h>

#include "plcguard/simlab/scenario.hpp"
#include "plcguard/telemetry.hpp"

using namespace plcguard;

namespace {

std::vector<telemetry::PacketMeta> packets(Label kind, std::size_t peers) {
  simlab::ScenarioSpec spec;
  spec.kind = kind;
  spec.duration_s = 30.0;
  spec.peer_count = peers;
  spec.rng_seed = 3;
  return simlab::packets_of(simlab::gen_traffic(spec));
}

void BM_IngestBenign(benchmark::State& state) {
  const auto pkts = packets(Label::Normal, static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  auto sensor = std::make_unique<telemetry::TelemetrySensor>();
  for (auto _ : state) {
    if (i == pkts.size()) {
      state.PauseTiming();
      sensor = std::make_unique<telemetry::TelemetrySensor>();
      i = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(sensor->ingest(pkts[i++]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IngestBenign)->Arg(1)->Arg(8)->Arg(64);

// Full 1000-packet windows: the median and histogram paths at their widest.
void BM_IngestFlood(benchmark::State& state) {
  const auto pkts = packets(Label::Ex7, 2);
  telemetry::TelemetrySensor sensor;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sensor.ingest(pkts[i]));
    i = (i + 1) % pkts.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IngestFlood);

}  // namespace
