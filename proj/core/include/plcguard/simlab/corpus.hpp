#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plcguard/dataset.hpp"
#include "plcguard/models.hpp"
#include "plcguard/simlab/scenario.hpp"

namespace plcguard::simlab {

/// Runs telemetry extraction over each trace (fresh sensor per trace) and
/// labels every row with its record's label.
dataset::LabeledDataset make_dataset(const std::vector<Trace>& traces, const BaselineSet& baselines);

/// Full-scale sample counts per dataset: benign-only baseline, training
/// set, external test set.
struct DatasetShape {
  std::size_t normal = 0;
  std::map<Label, std::size_t> attacks;
};

extern const std::array<DatasetShape, 3> kReferenceShapes;

struct CorpusConfig {
  double scale = 0.1;
  std::uint64_t seed = 1;
  double poll_interval_ms = 50.0;
  std::size_t peer_count = 8;
  /// The benign baseline is captured as one long session plus shorter
  /// ones, so connection start-up is represented more than once.
  std::size_t baseline_sessions = 8;
  double long_session_fraction = 0.75;
};

struct Corpus {
  dataset::LabeledDataset baseline;  // benign only
  dataset::LabeledDataset train;     // normal + six attacks
  dataset::LabeledDataset external;  // independently seeded, same shape
  BaselineSet baselines;             // fit on the benign trace
  std::vector<Trace> baseline_traces;  // one per capture session
};

/// Deterministic given the config.
Corpus build_corpus(const CorpusConfig& config);

/// Builds one labeled dataset of the given shape (scaled) from seed.
dataset::LabeledDataset build_labeled_dataset(const DatasetShape& shape, const CorpusConfig& config,
                                              std::uint64_t seed, const BaselineSet& baselines);

/// Plain-text per-label count table, one column per dataset.
std::string summary_table(const std::vector<std::pair<std::string, const dataset::LabeledDataset*>>& datasets);

}  // namespace plcguard::simlab
