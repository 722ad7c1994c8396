#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plcguard/dataset.hpp"
#include "plcguard/metrics.hpp"
#include "plcguard/models.hpp"

namespace plcguard {

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t n_trees = 200;
  std::size_t threads = 0;
  detect::TuneConfig tune;  // seed is overwritten from `seed`
  /// Fraction of benign rows held out to calibrate the final threshold.
  double calibration_fraction = 0.2;
  double classifier_train_fraction = 0.75;
  double correlation_threshold = 0.9;
};

/// One row of the preprocessing ablation.
struct AblationRow {
  std::string name;
  std::vector<std::string> features;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_macro_accuracy = 0.0;
};

struct TrainResult {
  DetectionModels models;
  detect::TuneResult tuning;
  std::vector<AblationRow> ablation;  // all-features, normalization, +correlation, +RFE
  detect::ConfusionMatrix holdout;    // final forest on the held-out classifier split
  std::size_t benign_rows = 0;
  std::size_t labeled_rows = 0;
};

/// Fits both pipelines. `benign` must be all Normal. `labeled` trains the
/// classifier and needs at least two attack labels; `validation` drives the
/// k sweep and needs both Normal and attack rows.
TrainResult train_models(const dataset::LabeledDataset& benign, const dataset::LabeledDataset& labeled,
                         const dataset::LabeledDataset& validation, BaselineSet baselines,
                         const TrainConfig& config);

struct EvalResult {
  detect::Metrics stage1;
  detect::ConfusionMatrix stage2;  // classifier on the attack rows
  std::vector<double> scores;      // LOF score per input row
};

EvalResult evaluate_models(const DetectionModels& models, const dataset::LabeledDataset& data);

std::string train_report_json(const TrainResult& result);
std::string metrics_json(const detect::Metrics& m);
std::string eval_report_json(const EvalResult& result);
/// truth,predicted,... matrix with a header row of class names.
std::string confusion_csv(const detect::ConfusionMatrix& cm);

}  // namespace plcguard
