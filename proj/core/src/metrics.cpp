#include "plcguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plcguard::detect {

namespace {

double ratio(double num, double den, bool& degenerate) {
  if (den == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return num / den;
}

}  // namespace

Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  Metrics m{tp, tn, fp, fn};
  const double TP = double(tp), TN = double(tn), FP = double(fp), FN = double(fn);
  m.accuracy = ratio(TP + TN, TP + TN + FP + FN, m.degenerate);
  m.precision = ratio(TP, TP + FP, m.degenerate);
  m.recall = ratio(TP, TP + FN, m.degenerate);
  m.specificity = ratio(TN, TN + FP, m.degenerate);
  m.f1 = ratio(2.0 * TP, 2.0 * TP + FP + FN, m.degenerate);
  // sqrt of each factor separately keeps the product in range for large counts.
  const double den = std::sqrt(TP + FP) * std::sqrt(TP + FN) * std::sqrt(TN + FP) * std::sqrt(TN + FN);
  m.mcc = std::clamp(ratio(TP * TN - FP * FN, den, m.degenerate), -1.0, 1.0);
  return m;
}

Metrics evaluate_binary(std::span<const bool> predicted_attack, std::span<const bool> actual_attack) {
  if (predicted_attack.size() != actual_attack.size())
    throw std::invalid_argument("evaluate: predictions and truth differ in length");
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted_attack.size(); ++i) {
    if (actual_attack[i]) predicted_attack[i] ? ++tp : ++fn;
    else predicted_attack[i] ? ++fp : ++tn;
  }
  return metrics_from_counts(tp, tn, fp, fn);
}

Metrics evaluate(std::span<const Label> predictions, std::span<const Label> truth) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("evaluate: predictions and truth differ in length");
  std::vector<char> pb(predictions.size()), tb(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pb[i] = is_attack(predictions[i]);
    tb[i] = is_attack(truth[i]);
  }
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (tb[i]) pb[i] ? ++tp : ++fn;
    else pb[i] ? ++fp : ++tn;
  }
  return metrics_from_counts(tp, tn, fp, fn);
}

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truth,
                          std::vector<Label> classes) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("confusion: predictions and truth differ in length");
  ConfusionMatrix cm;
  cm.classes = std::move(classes);
  cm.counts.assign(cm.classes.size(), std::vector<std::uint64_t>(cm.classes.size(), 0));
  auto pos = [&](Label l) -> std::size_t {
    auto it = std::find(cm.classes.begin(), cm.classes.end(), l);
    if (it == cm.classes.end()) throw std::invalid_argument("confusion: label outside class list");
    return static_cast<std::size_t>(it - cm.classes.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[pos(truth[i])][pos(predictions[i])];
  return cm;
}

double ConfusionMatrix::accuracy() const {
  std::uint64_t diag = 0, total = 0;
  for (std::size_t r = 0; r < counts.size(); ++r)
    for (std::size_t c = 0; c < counts.size(); ++c) {
      total += counts[r][c];
      if (r == c) diag += counts[r][c];
    }
  return total ? double(diag) / double(total) : 0.0;
}

double ConfusionMatrix::macro_accuracy() const {
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    std::uint64_t row = 0;
    for (auto v : counts[r]) row += v;
    if (row == 0) continue;
    ++present;
    sum += double(counts[r][r]) / double(row);
  }
  return present ? sum / double(present) : 0.0;
}

}  // namespace plcguard::detect
