#include "plcguard/training.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <spdlog/spdlog.h>
#include <sstream>
#include <stdexcept>

#include "plcguard/forest.hpp"
#include "plcguard/rng.hpp"

namespace plcguard {

using dataset::LabeledDataset;
using nlohmann::json;
using telemetry::kFeatureCount;
using telemetry::kFeatureNames;

namespace {

// Seed stream indices, one per stochastic stage.
enum SeedStream : std::uint64_t { kTune = 1, kCalibrate, kClassifierSplit, kForest, kRfe };

DenseMatrix raw_matrix(const LabeledDataset& data) {
  DenseMatrix m(data.rows.size(), kFeatureCount);
  for (std::size_t r = 0; r < data.rows.size(); ++r)
    for (std::size_t c = 0; c < kFeatureCount; ++c) m(r, c) = data.rows[r].observation.features.values[c];
  return m;
}

std::vector<std::string> names_of(std::span<const std::size_t> columns) {
  std::vector<std::string> out;
  for (auto c : columns) out.emplace_back(kFeatureNames[c]);
  return out;
}

std::vector<detect::Point2> embed_rows(const DenseMatrix& normalized, const preprocess::PcaModel& pca) {
  std::vector<detect::Point2> out;
  out.reserve(normalized.rows());
  for (std::size_t r = 0; r < normalized.rows(); ++r) {
    const auto p = preprocess::project(normalized.row(r), pca);
    out.push_back({p[0], p[1]});
  }
  return out;
}

double accuracy_of(const detect::ForestModel& model, const DenseMatrix& rows, std::span<const Label> truth) {
  if (rows.rows() == 0) return 0.0;
  const auto pred = detect::predict_all(model, rows);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return double(ok) / double(pred.size());
}

}  // namespace

TrainResult train_models(const LabeledDataset& benign, const LabeledDataset& labeled,
                         const LabeledDataset& validation, BaselineSet baselines, const TrainConfig& config) {
  if (benign.rows.size() < 3) throw std::invalid_argument("train: benign baseline needs at least 3 rows");
  for (const auto& r : benign.rows)
    if (r.label && *r.label != Label::Normal) throw std::invalid_argument("train: benign dataset contains attack rows");
  if (!labeled.fully_labeled()) throw std::invalid_argument("train: labeled dataset has rows without a label");
  if (!validation.fully_labeled()) throw std::invalid_argument("train: validation dataset has rows without a label");

  TrainResult result;
  result.benign_rows = benign.rows.size();
  result.labeled_rows = labeled.rows.size();
  auto& models = result.models;
  auto& pipeline = models.pipeline;
  pipeline.baselines = std::move(baselines);

  // Pipeline I: min-max and PCA on the benign baseline, LOF on its embedding.
  const auto benign_features = benign.features();
  pipeline.minmax = preprocess::fit_minmax(benign_features);
  const DenseMatrix benign_norm = preprocess::apply_minmax(benign_features, pipeline.minmax);
  pipeline.pca = preprocess::fit_pca(benign_norm, 2);
  const auto benign_points = embed_rows(benign_norm, pipeline.pca);

  const auto validation_labels = validation.labels();
  const auto validation_points =
      embed_rows(preprocess::apply_minmax(validation.features(), pipeline.minmax), pipeline.pca);

  detect::TuneConfig tune = config.tune;
  tune.seed = derive_seed(config.seed, kTune);
  result.tuning = detect::tune_k(benign_points, validation_points, validation_labels, tune);
  spdlog::info("tune_k selected k={}", result.tuning.best_k);

  {
    std::vector<std::size_t> order(benign_points.size());
    std::iota(order.begin(), order.end(), 0);
    SplitRng rng(derive_seed(config.seed, kCalibrate));
    shuffle(order, rng);
    auto n_hold = static_cast<std::size_t>(std::llround(config.calibration_fraction * double(order.size())));
    n_hold = std::clamp<std::size_t>(n_hold, 1, order.size() - result.tuning.best_k - 1);
    std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
    std::sort(fit_idx.begin(), fit_idx.end());
    std::vector<detect::Point2> fit_pts, hold_pts;
    for (auto i : fit_idx) fit_pts.push_back(benign_points[i]);
    for (std::size_t j = 0; j < n_hold; ++j) hold_pts.push_back(benign_points[order[j]]);
    models.lof = detect::fit_lof(std::move(fit_pts), result.tuning.best_k);
    const double tau = detect::calibrate_threshold(models.lof, hold_pts, tune.quantile);
    spdlog::info("LOF threshold {:.4f}", tau);
  }

  // Pipeline II on the labeled attack rows.
  const LabeledDataset attacks = labeled.filter([](const dataset::LabeledRow& r) { return is_attack(*r.label); });
  const auto attack_labels = attacks.labels();
  {
    std::vector<Label> distinct(attack_labels.begin(), attack_labels.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
      throw std::invalid_argument("train: classifier stage needs at least two attack labels");
  }
  auto [train_idx, test_idx] =
      preprocess::stratified_split(attack_labels, config.classifier_train_fraction,
                                   derive_seed(config.seed, kClassifierSplit));
  std::vector<Label> y_train, y_test;
  for (auto i : train_idx) y_train.push_back(attack_labels[i]);
  for (auto i : test_idx) y_test.push_back(attack_labels[i]);

  const DenseMatrix raw = raw_matrix(attacks);
  const DenseMatrix raw_train = raw.select_rows(train_idx);
  const DenseMatrix raw_test = raw.select_rows(test_idx);

  std::vector<telemetry::FeatureVector> train_vectors;
  for (auto i : train_idx) train_vectors.push_back(attacks.rows[i].observation.features);
  pipeline.minmax_labeled = preprocess::fit_minmax(train_vectors);
  DenseMatrix norm_train(train_idx.size(), kFeatureCount), norm_test(test_idx.size(), kFeatureCount);
  for (std::size_t r = 0; r < train_idx.size(); ++r) {
    const auto v = preprocess::apply_minmax(attacks.rows[train_idx[r]].observation.features, pipeline.minmax_labeled);
    std::copy(v.begin(), v.end(), norm_train.row(r).begin());
  }
  for (std::size_t r = 0; r < test_idx.size(); ++r) {
    const auto v = preprocess::apply_minmax(attacks.rows[test_idx[r]].observation.features, pipeline.minmax_labeled);
    std::copy(v.begin(), v.end(), norm_test.row(r).begin());
  }

  detect::ForestConfig forest_cfg{config.n_trees, derive_seed(config.seed, kForest), config.threads};
  auto run_config = [&](std::string name, const DenseMatrix& train, const DenseMatrix& test,
                        std::span<const std::size_t> columns) {
    const auto names = names_of(columns);
    auto model = detect::train_forest(train.select_columns(columns), y_train, forest_cfg, names);
    AblationRow row;
    row.name = std::move(name);
    row.features = names;
    row.train_accuracy = accuracy_of(model, train.select_columns(columns), y_train);
    const DenseMatrix test_sel = test.select_columns(columns);
    row.test_accuracy = accuracy_of(model, test_sel, y_test);
    const auto pred = detect::predict_all(model, test_sel);
    row.test_macro_accuracy = detect::confusion(pred, y_test, model.classes).macro_accuracy();
    spdlog::info("ablation {:<14} features={:2} train={:.4f} test={:.4f} macro={:.4f}", row.name, columns.size(),
                 row.train_accuracy, row.test_accuracy, row.test_macro_accuracy);
    result.ablation.push_back(row);
    return model;
  };

  std::vector<std::size_t> all(kFeatureCount);
  std::iota(all.begin(), all.end(), 0);
  run_config("all-features", raw_train, raw_test, all);
  run_config("normalization", norm_train, norm_test, all);

  const auto corr_kept = preprocess::fit_correlation_filter(norm_train, config.correlation_threshold);
  run_config("+correlation", norm_train, norm_test, corr_kept);

  detect::ForestConfig rfe_cfg{config.n_trees, derive_seed(config.seed, kRfe), config.threads};
  const auto rfe = preprocess::run_rfe(norm_train.select_columns(corr_kept), y_train, rfe_cfg);
  std::vector<std::size_t> rfe_kept;
  for (auto c : rfe.selected) rfe_kept.push_back(corr_kept[c]);
  std::sort(rfe_kept.begin(), rfe_kept.end());
  models.forest = run_config("+RFE", norm_train, norm_test, rfe_kept);

  pipeline.selection.kept_after_correlation = names_of(corr_kept);
  pipeline.selection.kept_after_rfe = names_of(rfe_kept);
  for (const auto& step : rfe.trace) pipeline.selection.rfe_accuracy_trace.push_back(step.validation_accuracy);

  const auto pred = detect::predict_all(models.forest, norm_test.select_columns(rfe_kept));
  result.holdout = detect::confusion(pred, y_test, models.forest.classes);
  return result;
}

EvalResult evaluate_models(const DetectionModels& models, const LabeledDataset& data) {
  if (!data.fully_labeled()) throw std::invalid_argument("eval: dataset has rows without a label");
  EvalResult out;
  std::vector<Label> truth = data.labels();
  std::vector<char> predicted(truth.size()), actual(truth.size());
  std::vector<Label> attack_truth, attack_pred;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& f = data.rows[i].observation.features;
    const double s = models.lof.score(models.embed(f));
    out.scores.push_back(s);
    predicted[i] = models.lof.is_anomalous(s);
    actual[i] = is_attack(truth[i]);
    if (actual[i]) {
      attack_truth.push_back(truth[i]);
      attack_pred.push_back(detect::classify(models.forest, models.classifier_row(f)).label);
    }
  }
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (actual[i]) predicted[i] ? ++tp : ++fn;
    else predicted[i] ? ++fp : ++tn;
  }
  out.stage1 = detect::metrics_from_counts(tp, tn, fp, fn);
  std::vector<Label> classes = models.forest.classes;
  for (auto l : attack_truth)
    if (std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
  std::sort(classes.begin(), classes.end());
  out.stage2 = detect::confusion(attack_pred, attack_truth, classes);
  return out;
}

namespace {

json metrics_to_json(const detect::Metrics& m) {
  return {{"tp", m.tp},          {"tn", m.tn},         {"fp", m.fp},
          {"fn", m.fn},          {"accuracy", m.accuracy}, {"precision", m.precision},
          {"recall", m.recall},  {"specificity", m.specificity}, {"f1", m.f1},
          {"mcc", m.mcc},        {"degenerate", m.degenerate}};
}

json confusion_to_json(const detect::ConfusionMatrix& cm) {
  json classes = json::array();
  for (auto c : cm.classes) classes.push_back(to_string(c));
  return {{"classes", classes},
          {"counts", cm.counts},
          {"accuracy", cm.accuracy()},
          {"macro_accuracy", cm.macro_accuracy()}};
}

}  // namespace

std::string metrics_json(const detect::Metrics& m) { return metrics_to_json(m).dump(2); }

std::string train_report_json(const TrainResult& r) {
  json sweep = json::array();
  for (const auto& row : r.tuning.sweep)
    sweep.push_back({{"k", row.k}, {"mean_fn", row.mean_false_negatives}, {"mean_fp", row.mean_false_positives}});
  json ablation = json::array();
  for (const auto& a : r.ablation)
    ablation.push_back({{"configuration", a.name},
                        {"features", a.features},
                        {"train_accuracy", a.train_accuracy},
                        {"test_accuracy", a.test_accuracy},
                        {"test_macro_accuracy", a.test_macro_accuracy}});
  const auto& m = r.models;
  json doc = {{"benign_rows", r.benign_rows},
              {"labeled_rows", r.labeled_rows},
              {"k", m.lof.k()},
              {"threshold", m.lof.threshold()},
              {"pca_explained_variance_ratio", m.pipeline.pca.explained_variance_ratio},
              {"k_sweep", sweep},
              {"corr_kept", m.pipeline.selection.kept_after_correlation},
              {"rfe_kept", m.pipeline.selection.kept_after_rfe},
              {"rfe_trace", m.pipeline.selection.rfe_accuracy_trace},
              {"oob_error", m.forest.oob_error},
              {"ablation", ablation},
              {"holdout", confusion_to_json(r.holdout)}};
  return doc.dump(2);
}

std::string eval_report_json(const EvalResult& r) {
  json doc = {{"stage1", metrics_to_json(r.stage1)}, {"stage2", confusion_to_json(r.stage2)}};
  return doc.dump(2);
}

std::string confusion_csv(const detect::ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "truth\\predicted";
  for (auto c : cm.classes) out << ',' << to_string(c);
  out << '\n';
  for (std::size_t r = 0; r < cm.classes.size(); ++r) {
    out << to_string(cm.classes[r]);
    for (auto v : cm.counts[r]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace plcguard
