#include "plcguard/simlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace plcguard::simlab {

using dataset::LabeledDataset;

const std::array<DatasetShape, 3> kReferenceShapes = {{
    {138352, {}},
    {135352,
     {{Label::Ex1, 3106}, {Label::Ex2, 4212}, {Label::Ex3, 4253}, {Label::Ex4, 4237}, {Label::Ex6, 9997}, {Label::Ex7, 3023}}},
    {46704,
     {{Label::Ex1, 3228}, {Label::Ex2, 4226}, {Label::Ex3, 4267}, {Label::Ex4, 4234}, {Label::Ex6, 10432}, {Label::Ex7, 3139}}},
}};

LabeledDataset make_dataset(const std::vector<Trace>& traces, const BaselineSet& baselines) {
  LabeledDataset out;
  for (const auto& trace : traces) {
    telemetry::TelemetrySensor sensor;
    sensor.set_baselines(baselines);
    for (const auto& r : trace) out.rows.push_back({sensor.ingest(r.meta), r.label});
  }
  return out;
}

namespace {

std::size_t scaled(std::size_t n, double scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(n) * scale)));
}

// Benign trace long enough for `rows` packets. Each peer keeps the same
// number of packets, so `rows` is rounded down to whole poll cycles.
Trace benign_trace(std::size_t rows, const CorpusConfig& config, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.kind = Label::Normal;
  spec.peer_count = config.peer_count;
  spec.poll_interval_ms = config.poll_interval_ms;
  spec.rng_seed = seed;
  const double pps = double(config.peer_count) * 1000.0 / config.poll_interval_ms;
  spec.duration_s = double(rows) / pps * 1.15 + 1.0;
  const std::size_t per_peer = std::max<std::size_t>(1, rows / config.peer_count);
  std::map<MacAddress, std::size_t> kept;
  Trace out;
  for (auto& r : gen_traffic(spec))
    if (kept[r.meta.src_mac]++ < per_peer) out.push_back(std::move(r));
  return out;
}

}  // namespace

LabeledDataset build_labeled_dataset(const DatasetShape& shape, const CorpusConfig& config, std::uint64_t seed,
                                     const BaselineSet& baselines) {
  std::vector<Trace> traces;
  std::size_t normal = 0;
  std::uint64_t stream = 0;
  for (const auto& [label, count] : shape.attacks) {
    ScenarioSpec spec;
    spec.kind = label;
    spec.peer_count = config.peer_count;
    spec.poll_interval_ms = config.poll_interval_ms;
    spec.rng_seed = derive_seed(seed, ++stream);
    spec.attack_packets = scaled(count, config.scale);
    spec.duration_s = 1.0;
    traces.push_back(gen_traffic(spec));
    for (const auto& r : traces.back()) normal += r.label == Label::Normal;
  }
  const std::size_t target = scaled(shape.normal, config.scale);
  if (normal < target) traces.push_back(benign_trace(target - normal, config, derive_seed(seed, ++stream)));
  return make_dataset(traces, baselines);
}

Corpus build_corpus(const CorpusConfig& config) {
  if (config.baseline_sessions == 0) throw std::invalid_argument("baseline_sessions must be positive");
  Corpus c;
  const std::size_t total = scaled(kReferenceShapes[0].normal, config.scale);
  const std::size_t short_sessions = config.baseline_sessions - 1;
  const std::size_t long_rows =
      short_sessions == 0 ? total : static_cast<std::size_t>(std::llround(double(total) * config.long_session_fraction));
  std::vector<std::size_t> rows{long_rows};
  for (std::size_t i = 0; i < short_sessions; ++i)
    rows.push_back((total - long_rows) / short_sessions + (i < (total - long_rows) % short_sessions ? 1 : 0));
  const auto base_seed = derive_seed(config.seed, 1);
  std::vector<telemetry::PacketMeta> packets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.baseline_traces.push_back(benign_trace(rows[i], config, derive_seed(base_seed, i)));
    const auto p = packets_of(c.baseline_traces.back());
    packets.insert(packets.end(), p.begin(), p.end());
  }
  c.baselines = telemetry::fit_baseline(packets).baselines;
  c.baseline = make_dataset(c.baseline_traces, c.baselines);
  c.train = build_labeled_dataset(kReferenceShapes[1], config, derive_seed(config.seed, 2), c.baselines);
  c.external = build_labeled_dataset(kReferenceShapes[2], config, derive_seed(config.seed, 3), c.baselines);
  return c;
}

std::string summary_table(const std::vector<std::pair<std::string, const LabeledDataset*>>& datasets) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-8s", "Label");
  out << buf;
  for (const auto& [name, _] : datasets) {
    std::snprintf(buf, sizeof buf, " %12s", name.c_str());
    out << buf;
  }
  out << '\n';
  std::vector<std::map<Label, std::size_t>> counts;
  for (const auto& [_, d] : datasets) counts.push_back(d->label_counts());
  std::vector<std::size_t> totals(datasets.size(), 0);
  for (auto label : kAllLabels) {
    std::snprintf(buf, sizeof buf, "%-8s", std::string(to_string(label)).c_str());
    out << buf;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      auto it = counts[i].find(label);
      const std::size_t n = it == counts[i].end() ? 0 : it->second;
      totals[i] += n;
      std::snprintf(buf, sizeof buf, " %12zu", n);
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "%-8s", "Total");
  out << buf;
  for (auto t : totals) {
    std::snprintf(buf, sizeof buf, " %12zu", t);
    out << buf;
  }
  out << '\n';
  return out.str();
}

}  // namespace plcguard::simlab
