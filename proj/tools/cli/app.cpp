#include "cli/app.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "plcguard/models.hpp"
#include "plcguard/relay.hpp"

namespace plcguard::cli {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

CLI::Option* find_option(CLI::App& sub, CLI::App& root, const std::string& name) {
  if (auto* o = sub.get_option_no_throw("--" + name)) return o;
  return root.get_option_no_throw("--" + name);
}

/// Flat "key = value" file; fills options not given on the command line.
/// Keys use '_' or '-' interchangeably, so a relay config file works as-is
/// for `serve`.
void apply_config_file(const fs::path& path, CLI::App& sub, CLI::App& root) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    auto* opt = find_option(sub, root, key);
    if (!opt || key == "config")
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // command line wins
    if (opt->get_expected_max() > 1) {
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) opt->add_result(trim(item));
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

nlohmann::json snapshot(const CLI::App& sub, const CLI::App& root) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto* app : {&root, &sub})
    for (const auto* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? nlohmann::json(r.front()) : nlohmann::json(r);
      } else {
        j[name] = opt->get_default_str();
      }
    }
  return j;
}

}  // namespace

int run_cli(int argc, char** argv) {
  auto logger = spdlog::get("plcguard");
  if (!logger) logger = spdlog::stderr_color_mt("plcguard");
  spdlog::set_default_logger(logger);

  CLI::App app{"Modbus/TCP intrusion detection relay and scenario lab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string models, out, config, manifest_override;
  bool verbose = false;
  app.add_option("--seed", seed, "Seed for every stochastic stage");
  app.add_option("--models", models, "Models JSON");
  app.add_option("--out", out, "Output file or directory");
  app.add_option("--config", config, "key = value file supplying defaults for any option");
  app.add_option("--manifest", manifest_override, "Where to write the run manifest");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a labeled trace, or a full dataset corpus");
  simulate->add_option("--kind", sim.kind, "Normal, EX-1, EX-2, EX-3, EX-4, EX-6 or EX-7");
  simulate->add_option("--duration", sim.duration_s, "Seconds of traffic");
  simulate->add_option("--peers", sim.peers, "Benign polling peers");
  simulate->add_option("--poll-ms", sim.poll_ms, "Benign poll interval");
  simulate->add_option("--packet-size", sim.packet_size, "EX-7 message size (0 draws from 200..2000)");
  simulate->add_option("--threads", sim.threads, "EX-7 sender threads");
  simulate->add_option("--attack-packets", sim.attack_packets, "Exact attack packet count (0 = until the end)");
  simulate->add_option("--attack-start", sim.attack_start_s, "Attack onset in seconds");
  simulate->add_flag("--corpus", sim.corpus, "Write dataset_I/II/III.csv and baselines.json into --out");
  simulate->add_option("--scale", sim.scale, "Corpus size relative to full scale");

  ExtractOptions ext;
  std::string ext_in, ext_baselines;
  bool no_label = false;
  auto* extract = app.add_subcommand("extract", "Turn a trace into a feature CSV");
  extract->add_option("--in", ext_in, "Trace (JSON lines)");
  extract->add_option("--baselines", ext_baselines, "Baselines JSON for the divergence feature");
  extract->add_flag("--no-label", no_label, "Omit the label column");

  FitBaselineOptions fit;
  std::vector<std::string> fit_in;
  auto* fit_baseline = app.add_subcommand("fit-baseline", "Fit per-peer size histograms from benign traces");
  fit_baseline->add_option("--in", fit_in, "Benign traces")->expected(1, -1);
  fit_baseline->add_option("--min-packets", fit.min_packets, "Peers with fewer packets are skipped");

  TrainOptions tr;
  std::string tr_corpus, tr_benign, tr_labeled, tr_validation, tr_baselines, tr_report;
  auto* train = app.add_subcommand("train", "Fit the detection and classification models");
  train->add_option("--corpus", tr_corpus, "Directory from simulate --corpus");
  train->add_option("--benign", tr_benign, "Benign-only feature CSV");
  train->add_option("--labeled", tr_labeled, "Labeled training CSV");
  train->add_option("--validation", tr_validation, "Labeled CSV for the neighbourhood-size sweep");
  train->add_option("--baselines", tr_baselines, "Baselines JSON");
  train->add_option("--trees", tr.trees, "Forest size");
  train->add_option("--tune-repeats", tr.tune_repeats, "Resplits per candidate k");
  train->add_option("--threads", tr.threads, "Worker threads (0 = hardware)");
  train->add_option("--report", tr_report, "Training report path (default: <out>.report.json)");

  EvalOptions ev;
  std::string ev_data;
  auto* eval = app.add_subcommand("eval", "Score a labeled feature CSV");
  eval->add_option("--data", ev_data, "Labeled feature CSV");

  std::string listen = "0.0.0.0:502", upstream = "127.0.0.1:4321", policy, decision_log, incident_log, block_cmd;
  std::size_t max_sessions = 1024;
  int idle_timeout_s = 300;
  auto* serve = app.add_subcommand("serve", "Run the mediation relay in front of a controller");
  serve->add_option("--listen", listen, "host:port to accept clients on");
  serve->add_option("--upstream", upstream, "Controller host:port");
  serve->add_option("--policy", policy, "Response policy JSON");
  serve->add_option("--log", decision_log, "Decision log (JSON lines)");
  serve->add_option("--incident-log", incident_log, "Incident log (JSON lines)");
  serve->add_option("--block-cmd", block_cmd, "Shell command per block, {ip} substituted");
  serve->add_option("--max-sessions", max_sessions, "Concurrent client sessions");
  serve->add_option("--idle-timeout-s", idle_timeout_s, "Idle session timeout");

  BenchOptions be;
  auto* bench = app.add_subcommand("bench", "Round-trip latency with and without the relay");
  bench->add_option("--cycles", be.cycles, "Request/response cycles per function");
  bench->add_option("--poll-ms", be.poll_ms, "Client pacing");

  FloodOptions fl;
  auto* flood = app.add_subcommand("flood", "Flood mitigation sweeps over message size and thread count");
  flood->add_option("--sizes", fl.sizes, "Message sizes for the size sweep")->delimiter(',');
  flood->add_option("--size-threads", fl.size_threads, "Threads during the size sweep");
  flood->add_option("--thread-counts", fl.thread_counts, "Thread counts for the thread sweep")->delimiter(',');
  flood->add_option("--thread-size", fl.thread_size, "Message size during the thread sweep");
  flood->add_option("--repetitions", fl.repetitions, "Runs per setting");
  flood->add_option("--max-connections", fl.max_connections, "Connections the threads share");
  flood->add_option("--timeout-ms", fl.timeout_ms, "Give up on a run after this long");

  ReportOptions rep;
  std::vector<std::string> rep_in;
  auto* report = app.add_subcommand("report", "Render artifacts as plain-text tables");
  report->add_option("inputs", rep_in, "CSV, JSON or text artifacts")->expected(0, -1);

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
  auto* sub = app.get_subcommands().front();

  RunManifest manifest;
  manifest.command = sub->get_name();
  const auto started = std::chrono::steady_clock::now();
  int status = 0;
  try {
    if (!config.empty()) {
      apply_config_file(config, *sub, app);
      manifest.inputs.push_back(config);
    }
    manifest.config = snapshot(*sub, app);

    const auto name = sub->get_name();
    if (name == "simulate") {
      sim.seed = seed;
      sim.out = out;
      status = run_simulate(sim, manifest);
    } else if (name == "extract") {
      ext.trace = ext_in;
      if (!ext_baselines.empty()) ext.baselines = ext_baselines;
      ext.with_label = !no_label;
      ext.out = out;
      status = run_extract(ext, manifest);
    } else if (name == "fit-baseline") {
      fit.traces.assign(fit_in.begin(), fit_in.end());
      fit.out = out;
      status = run_fit_baseline(fit, manifest);
    } else if (name == "train") {
      auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
      tr.corpus = opt(tr_corpus);
      tr.benign = opt(tr_benign);
      tr.labeled = opt(tr_labeled);
      tr.validation = opt(tr_validation);
      tr.baselines = opt(tr_baselines);
      tr.report = opt(tr_report);
      tr.seed = seed;
      tr.out = out;
      status = run_train(tr, manifest);
    } else if (name == "eval") {
      ev.models = models;
      ev.data = ev_data;
      ev.out = out;
      status = run_eval(ev, manifest);
    } else if (name == "serve") {
      relay::RelayConfig rc;
      rc.listen = net::Endpoint::parse(listen);
      rc.upstream = net::Endpoint::parse(upstream);
      if (models.empty()) throw std::invalid_argument("serve: --models is required");
      rc.models_path = models;
      if (!policy.empty()) rc.policy_path = policy;
      if (!decision_log.empty()) rc.decision_log = decision_log;
      if (!incident_log.empty()) rc.incident_log = incident_log;
      if (!block_cmd.empty()) rc.block_cmd = block_cmd;
      rc.max_sessions = max_sessions;
      rc.idle_timeout_s = idle_timeout_s;
      rc.validate();
      manifest.inputs.push_back(rc.models_path);
      if (rc.policy_path) manifest.inputs.push_back(*rc.policy_path);
      if (rc.decision_log) manifest.outputs.push_back(*rc.decision_log);
      if (rc.incident_log) manifest.outputs.push_back(*rc.incident_log);
      status = relay::run_relay(rc);
    } else if (name == "bench") {
      be.models = models;
      be.seed = seed;
      be.out = out;
      status = run_bench(be, manifest);
    } else if (name == "flood") {
      fl.models = models;
      fl.seed = seed;
      fl.out = out;
      status = run_flood(fl, manifest);
    } else if (name == "report") {
      rep.inputs.assign(rep_in.begin(), rep_in.end());
      if (!out.empty()) rep.out = out;
      status = run_report(rep, manifest);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", manifest.command, e.what());
    manifest.error = e.what();
    status = 2;
  }

  manifest.exit_status = status;
  manifest.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  try {
    manifest.hash_outputs();
    const fs::path where = !manifest_override.empty() ? fs::path(manifest_override)
                           : out.empty()              ? fs::path(manifest.command + ".manifest.json")
                                                      : manifest_path_for(out);
    manifest.write(where);
  } catch (const std::exception& e) {
    spdlog::error("manifest: {}", e.what());
    if (status == 0) status = 2;
  }
  return status;
}

}  // namespace plcguard::cli
