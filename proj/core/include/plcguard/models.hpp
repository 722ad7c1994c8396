#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "plcguard/forest.hpp"
#include "plcguard/lof.hpp"
#include "plcguard/preprocess.hpp"
#include "plcguard/telemetry.hpp"

namespace plcguard {

using BaselineSet = std::map<MacAddress, telemetry::BaselineHistogram>;

/// Frozen transforms shared by training, evaluation and the relay.
struct PipelineModels {
  preprocess::MinMaxBounds minmax;           // pipeline I, fit on the benign baseline
  preprocess::PcaModel pca;
  preprocess::FeatureSelection selection;
  preprocess::MinMaxBounds minmax_labeled;   // pipeline II, fit on labeled training rows
  BaselineSet baselines;
};

/// Everything the relay needs to score traffic.
struct DetectionModels {
  PipelineModels pipeline;
  detect::LofModel lof;
  detect::ForestModel forest;

  /// Pipeline I: min-max then 2-D projection.
  detect::Point2 embed(const telemetry::FeatureVector& v) const;
  /// Pipeline II: labeled min-max restricted to the forest's features.
  std::vector<double> classifier_row(const telemetry::FeatureVector& v) const;
};

std::string baselines_to_json(const BaselineSet& baselines);
BaselineSet baselines_from_json(const std::string& text);

std::string models_to_json(const DetectionModels& models);
DetectionModels models_from_json(const std::string& text);

void save_models(const std::filesystem::path& path, const DetectionModels& models);
DetectionModels load_models(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace plcguard
