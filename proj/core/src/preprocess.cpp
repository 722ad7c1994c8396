#include "plcguard/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "plcguard/forest.hpp"
#include "plcguard/rng.hpp"

namespace plcguard::preprocess {

MinMaxBounds fit_minmax(std::span<const FeatureVector> dataset) {
  if (dataset.empty()) throw std::invalid_argument("fit_minmax: empty dataset");
  MinMaxBounds b;
  for (std::size_t f = 0; f < kFeatureCount; ++f) b.bounds[f] = {dataset[0].values[f], dataset[0].values[f]};
  for (const auto& row : dataset) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      b.bounds[f].min = std::min(b.bounds[f].min, row.values[f]);
      b.bounds[f].max = std::max(b.bounds[f].max, row.values[f]);
    }
  }
  return b;
}

FeatureArray apply_minmax(const FeatureVector& v, const MinMaxBounds& b) {
  FeatureArray out{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto [lo, hi] = b.bounds[f];
    if (!(hi > lo)) {
      out[f] = 0.0;
      continue;
    }
    out[f] = std::clamp((v.values[f] - lo) / (hi - lo), 0.0, 1.0);
  }
  return out;
}

DenseMatrix apply_minmax(std::span<const FeatureVector> rows, const MinMaxBounds& b) {
  DenseMatrix out(rows.size(), kFeatureCount);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto n = apply_minmax(rows[r], b);
    std::copy(n.begin(), n.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> project(std::span<const double> v, const PcaModel& m) {
  if (v.size() != m.mean.size())
    throw std::invalid_argument("project: vector has " + std::to_string(v.size()) + " entries, model expects " +
                                std::to_string(m.mean.size()));
  std::vector<double> out(m.components.size(), 0.0);
  for (std::size_t c = 0; c < m.components.size(); ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) acc += (v[j] - m.mean[j]) * m.components[c][j];
    out[c] = acc;
  }
  return out;
}

double pearson(const DenseMatrix& data, std::size_t a, std::size_t b) {
  const std::size_t n = data.rows();
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    ma += data(r, a);
    mb += data(r, b);
  }
  ma /= double(n);
  mb /= double(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double da = data(r, a) - ma;
    const double db = data(r, b) - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::size_t> fit_correlation_filter(const DenseMatrix& data, double threshold) {
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    bool redundant = false;
    for (auto i : kept) {
      if (std::abs(pearson(data, i, j)) > threshold) {
        redundant = true;
        break;
      }
    }
    if (!redundant) kept.push_back(j);
  }
  return kept;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const Label> labels,
                                                                              double train_fraction,
                                                                              std::uint64_t seed) {
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  SplitRng rng(seed);
  std::vector<std::size_t> train, validation;
  for (auto& [label, idx] : by_class) {
    shuffle(idx, rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * double(idx.size())));
    if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    else n_train = idx.size();
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    validation.insert(validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {train, validation};
}

RfeResult run_rfe(const DenseMatrix& data, std::span<const Label> labels, const detect::ForestConfig& config) {
  if (labels.size() != data.rows()) throw std::invalid_argument("run_rfe: label count mismatch");
  if (data.cols() == 0) throw std::invalid_argument("run_rfe: no features");
  {
    std::vector<Label> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
      throw std::invalid_argument("run_rfe: need at least two classes");
  }
  auto [train_idx, val_idx] = stratified_split(labels, 0.75, config.seed);
  const DenseMatrix train_all = data.select_rows(train_idx);
  const DenseMatrix val_all = data.select_rows(val_idx);
  std::vector<Label> train_labels, val_labels;
  for (auto i : train_idx) train_labels.push_back(labels[i]);
  for (auto i : val_idx) val_labels.push_back(labels[i]);

  RfeResult result;
  std::vector<std::size_t> current(data.cols());
  std::iota(current.begin(), current.end(), 0);
  while (true) {
    const auto model = detect::train_forest(train_all.select_columns(current), train_labels, config);
    const DenseMatrix val = val_all.select_columns(current);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < val.rows(); ++r)
      if (detect::classify(model, val.row(r)).label == val_labels[r]) ++correct;
    const double acc = val.rows() ? double(correct) / double(val.rows()) : 0.0;
    result.trace.push_back({current, acc, model.oob_error});
    if (current.size() == 1) break;
    const auto weakest = static_cast<std::size_t>(
        std::min_element(model.importances.begin(), model.importances.end()) - model.importances.begin());
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(weakest));
  }
  // Highest accuracy, then lowest out-of-bag error; remaining ties go to the
  // smaller subset (later in the trace).
  const RfeStep* best = &result.trace.front();
  for (const auto& step : result.trace)
    if (step.validation_accuracy > best->validation_accuracy ||
        (step.validation_accuracy == best->validation_accuracy && step.oob_error <= best->oob_error))
      best = &step;
  result.selected = best->columns;
  result.selected_accuracy = best->validation_accuracy;
  return result;
}

}  // namespace plcguard::preprocess
