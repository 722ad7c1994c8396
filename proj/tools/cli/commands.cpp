#include "cli/commands.hpp"

#include <cstdio>
#include <iostream>
#include <memory>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "plcguard/dataset.hpp"
#include "plcguard/models.hpp"
#include "plcguard/simlab/bench.hpp"
#include "plcguard/simlab/corpus.hpp"
#include "plcguard/simlab/flood.hpp"
#include "plcguard/simlab/scenario.hpp"
#include "plcguard/training.hpp"

namespace plcguard::cli {

using nlohmann::json;

namespace {

void require_out(const fs::path& out, std::string_view command) {
  if (out.empty()) throw std::invalid_argument(std::string(command) + ": --out is required");
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::shared_ptr<const DetectionModels> load_shared_models(const fs::path& path, RunManifest& m) {
  if (path.empty()) throw std::invalid_argument("--models is required");
  m.inputs.push_back(path);
  return std::make_shared<const DetectionModels>(load_models(path));
}

}  // namespace

int run_simulate(const SimulateOptions& o, RunManifest& m) {
  require_out(o.out, "simulate");
  m.seeds["seed"] = o.seed;
  if (o.corpus) {
    simlab::CorpusConfig cc;
    cc.scale = o.scale;
    cc.seed = o.seed;
    cc.poll_interval_ms = o.poll_ms;
    cc.peer_count = o.peers;
    const auto corpus = simlab::build_corpus(cc);
    fs::create_directories(o.out);
    const std::pair<const char*, const dataset::LabeledDataset*> sets[] = {
        {"dataset_I.csv", &corpus.baseline}, {"dataset_II.csv", &corpus.train}, {"dataset_III.csv", &corpus.external}};
    for (const auto& [name, data] : sets) {
      dataset::write_feature_csv(o.out / name, *data, true);
      m.outputs.push_back(o.out / name);
    }
    write_text_file(o.out / "baselines.json", baselines_to_json(corpus.baselines));
    const auto summary = simlab::summary_table(
        {{"Dataset I", &corpus.baseline}, {"Dataset II", &corpus.train}, {"Dataset III", &corpus.external}});
    write_text_file(o.out / "summary.txt", summary);
    m.outputs.push_back(o.out / "baselines.json");
    m.outputs.push_back(o.out / "summary.txt");
    std::cout << summary;
    return 0;
  }
  simlab::ScenarioSpec spec;
  spec.kind = label_from_string(o.kind);
  spec.duration_s = o.duration_s;
  spec.peer_count = o.peers;
  spec.poll_interval_ms = o.poll_ms;
  spec.packet_size_bytes = o.packet_size;
  spec.thread_count = o.threads;
  spec.rng_seed = o.seed;
  spec.attack_packets = o.attack_packets;
  spec.attack_start_s = o.attack_start_s;
  const auto trace = simlab::gen_traffic(spec);
  ensure_parent(o.out);
  simlab::write_trace(o.out, trace);
  m.outputs.push_back(o.out);
  spdlog::info("simulate: {} records -> {}", trace.size(), o.out.string());
  return 0;
}

int run_extract(const ExtractOptions& o, RunManifest& m) {
  require_out(o.out, "extract");
  if (o.trace.empty()) throw std::invalid_argument("extract: --in is required");
  m.inputs.push_back(o.trace);
  BaselineSet baselines;
  if (o.baselines) {
    baselines = baselines_from_json(read_text_file(*o.baselines));
    m.inputs.push_back(*o.baselines);
  }
  const auto data = simlab::make_dataset({simlab::read_trace(o.trace)}, baselines);
  ensure_parent(o.out);
  dataset::write_feature_csv(o.out, data, o.with_label);
  m.outputs.push_back(o.out);
  spdlog::info("extract: {} rows -> {}", data.rows.size(), o.out.string());
  return 0;
}

int run_fit_baseline(const FitBaselineOptions& o, RunManifest& m) {
  require_out(o.out, "fit-baseline");
  if (o.traces.empty()) throw std::invalid_argument("fit-baseline: at least one --in trace is required");
  std::vector<telemetry::PacketMeta> packets;
  for (const auto& t : o.traces) {
    const auto trace = simlab::read_trace(t);
    for (const auto& r : trace)
      if (r.label != Label::Normal) throw std::invalid_argument("fit-baseline: " + t.string() + " contains attack records");
    const auto p = simlab::packets_of(trace);
    packets.insert(packets.end(), p.begin(), p.end());
    m.inputs.push_back(t);
  }
  const auto fit = telemetry::fit_baseline(packets, o.min_packets);
  for (const auto& [mac, n] : fit.excluded)
    spdlog::warn("fit-baseline: peer {} has only {} packets, skipped", mac.to_string(), n);
  if (fit.baselines.empty()) throw std::runtime_error("fit-baseline: no peer has enough packets");
  ensure_parent(o.out);
  write_text_file(o.out, baselines_to_json(fit.baselines));
  m.outputs.push_back(o.out);
  return 0;
}

int run_train(const TrainOptions& o, RunManifest& m) {
  require_out(o.out, "train");
  auto pick = [&](const std::optional<fs::path>& given, const char* corpus_name, const char* flag) {
    if (given) return *given;
    if (o.corpus) return *o.corpus / corpus_name;
    throw std::invalid_argument(std::string("train: --") + flag + " or --corpus is required");
  };
  const auto benign_path = pick(o.benign, "dataset_I.csv", "benign");
  const auto labeled_path = pick(o.labeled, "dataset_II.csv", "labeled");
  const auto validation_path = pick(o.validation, "dataset_III.csv", "validation");
  const auto baselines_path = pick(o.baselines, "baselines.json", "baselines");
  for (const auto& p : {benign_path, labeled_path, validation_path, baselines_path}) m.inputs.push_back(p);

  TrainConfig tc;
  tc.seed = o.seed;
  tc.n_trees = o.trees;
  tc.threads = o.threads;
  tc.tune.repeats = o.tune_repeats;
  m.seeds["seed"] = o.seed;

  const auto result = train_models(dataset::read_feature_csv(benign_path), dataset::read_feature_csv(labeled_path),
                                   dataset::read_feature_csv(validation_path),
                                   baselines_from_json(read_text_file(baselines_path)), tc);
  ensure_parent(o.out);
  save_models(o.out, result.models);
  const auto report = o.report ? *o.report : fs::path(o.out).replace_extension(".report.json");
  ensure_parent(report);
  write_text_file(report, train_report_json(result) + "\n");
  m.outputs.push_back(o.out);
  m.outputs.push_back(report);
  spdlog::info("train: k={} threshold={:.4f} features={}", result.models.lof.k(), result.models.lof.threshold(),
               result.models.pipeline.selection.kept_after_rfe.size());
  return 0;
}

int run_eval(const EvalOptions& o, RunManifest& m) {
  require_out(o.out, "eval");
  if (o.data.empty()) throw std::invalid_argument("eval: --data is required");
  const auto models = load_shared_models(o.models, m);
  m.inputs.push_back(o.data);
  const auto data = dataset::read_feature_csv(o.data);
  if (!data.fully_labeled()) throw std::invalid_argument("eval: dataset has unlabeled rows");
  const auto result = evaluate_models(*models, data);
  fs::create_directories(o.out);
  write_text_file(o.out / "metrics.json", eval_report_json(result) + "\n");
  write_text_file(o.out / "confusion.csv", confusion_csv(result.stage2));
  m.outputs.push_back(o.out / "metrics.json");
  m.outputs.push_back(o.out / "confusion.csv");
  std::printf("stage 1: accuracy %.5f recall %.5f fpr %.5f mcc %.5f\nstage 2: accuracy %.5f macro %.5f\n",
              result.stage1.accuracy, result.stage1.recall, result.stage1.false_positive_rate(), result.stage1.mcc,
              result.stage2.accuracy(), result.stage2.macro_accuracy());
  return 0;
}

int run_bench(const BenchOptions& o, RunManifest& m) {
  require_out(o.out, "bench");
  const auto models = load_shared_models(o.models, m);
  simlab::BenchConfig bc;
  bc.cycles = o.cycles;
  bc.poll_interval_ms = o.poll_ms;
  bc.seed = o.seed;
  m.seeds["seed"] = o.seed;
  const auto report = simlab::bench_latency(models, bc);
  ensure_parent(o.out);
  write_text_file(o.out, report.to_csv());
  m.outputs.push_back(o.out);
  std::cout << render_artifact(o.out);
  std::size_t lost = 0;
  for (const auto& r : report.rows) lost += r.lost;
  std::printf("pooled median overhead: %.1f us (%zu lost, relay dropped %llu)\n",
              report.pooled_median_overhead_us(), lost, static_cast<unsigned long long>(report.relay_dropped));
  if (!report.valid) {
    for (const auto& e : report.errors) spdlog::error("bench: {}", e);
    return 1;
  }
  return 0;
}

int run_flood(const FloodOptions& o, RunManifest& m) {
  require_out(o.out, "flood");
  const auto models = load_shared_models(o.models, m);
  simlab::FloodConfig fc;
  fc.sizes = o.sizes;
  fc.size_sweep_threads = o.size_threads;
  fc.thread_counts = o.thread_counts;
  fc.thread_sweep_size = o.thread_size;
  fc.repetitions = o.repetitions;
  fc.max_connections = o.max_connections;
  fc.timeout = std::chrono::milliseconds(o.timeout_ms);
  fc.seed = o.seed;
  m.seeds["seed"] = o.seed;
  const auto report = simlab::flood_experiment(models, fc);
  fs::create_directories(o.out);
  write_text_file(o.out / "flood_size.csv", simlab::FloodReport::to_csv(report.size_sweep));
  write_text_file(o.out / "flood_threads.csv", simlab::FloodReport::to_csv(report.thread_sweep));
  m.outputs.push_back(o.out / "flood_size.csv");
  m.outputs.push_back(o.out / "flood_threads.csv");
  std::cout << render_artifact(o.out / "flood_size.csv") << '\n' << render_artifact(o.out / "flood_threads.csv");
  if (const auto failed = report.failures()) {
    spdlog::error("flood: {} repetitions never installed a block", failed);
    return 1;
  }
  return 0;
}

int run_report(const ReportOptions& o, RunManifest& m) {
  if (o.inputs.empty()) throw std::invalid_argument("report: no input artifacts");
  std::string text;
  for (const auto& p : o.inputs) {
    m.inputs.push_back(p);
    if (!text.empty()) text += '\n';
    text += "== " + p.filename().string() + " ==\n" + render_artifact(p);
  }
  std::cout << text;
  if (o.out) {
    ensure_parent(*o.out);
    write_text_file(*o.out, text);
    m.outputs.push_back(*o.out);
  }
  return 0;
}

}  // namespace plcguard::cli
