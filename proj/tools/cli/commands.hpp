#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cli/manifest.hpp"

namespace plcguard::cli {

namespace fs = std::filesystem;

struct SimulateOptions {
  std::string kind = "Normal";  // Normal or EX-1..EX-7
  double duration_s = 60.0;
  std::size_t peers = 8;
  double poll_ms = 50.0;
  std::uint32_t packet_size = 0;
  std::size_t threads = 500;
  std::size_t attack_packets = 0;
  double attack_start_s = 2.0;
  std::uint64_t seed = 1;
  /// Build the three labeled datasets and baselines instead of one trace.
  bool corpus = false;
  double scale = 0.1;
  fs::path out;
};

struct ExtractOptions {
  fs::path trace;
  std::optional<fs::path> baselines;
  bool with_label = true;
  fs::path out;
};

struct FitBaselineOptions {
  std::vector<fs::path> traces;
  std::size_t min_packets = 100;
  fs::path out;
};

struct TrainOptions {
  std::optional<fs::path> corpus;  // directory written by simulate --corpus
  std::optional<fs::path> benign, labeled, validation, baselines;
  std::uint64_t seed = 1;
  std::size_t trees = 200;
  std::size_t tune_repeats = 20;
  std::size_t threads = 0;
  fs::path out;  // models JSON
  std::optional<fs::path> report;
};

struct EvalOptions {
  fs::path models;
  fs::path data;
  fs::path out;  // directory
};

struct BenchOptions {
  fs::path models;
  std::size_t cycles = 500;
  double poll_ms = 50.0;
  std::uint64_t seed = 1;
  fs::path out;  // CSV
};

struct FloodOptions {
  fs::path models;
  std::vector<std::uint32_t> sizes{200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000};
  std::size_t size_threads = 500;
  std::vector<std::size_t> thread_counts{100, 500, 1000, 2000, 5000, 10000};
  std::uint32_t thread_size = 1200;
  std::size_t repetitions = 10;
  std::size_t max_connections = 64;
  int timeout_ms = 10000;
  std::uint64_t seed = 1;
  fs::path out;  // directory
};

struct ReportOptions {
  std::vector<fs::path> inputs;
  std::optional<fs::path> out;
};

/// Each command writes its outputs and fills in the manifest (without
/// timing or hashes, which the caller adds). Returns the exit status.
int run_simulate(const SimulateOptions& o, RunManifest& m);
int run_extract(const ExtractOptions& o, RunManifest& m);
int run_fit_baseline(const FitBaselineOptions& o, RunManifest& m);
int run_train(const TrainOptions& o, RunManifest& m);
int run_eval(const EvalOptions& o, RunManifest& m);
int run_bench(const BenchOptions& o, RunManifest& m);
int run_flood(const FloodOptions& o, RunManifest& m);
int run_report(const ReportOptions& o, RunManifest& m);

/// Plain-text table for one artifact; the kind is inferred from its name
/// and header.
std::string render_artifact(const fs::path& path);

}  // namespace plcguard::cli
