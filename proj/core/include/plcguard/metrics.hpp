#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plcguard/types.hpp"

namespace plcguard::detect {

/// Binary confusion counts (attack = positive) and derived scores.
struct Metrics {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  /// Set when any derived metric had a zero denominator and was reported as 0.
  bool degenerate = false;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  double false_positive_rate() const { return tn + fp ? double(fp) / double(tn + fp) : 0.0; }
};

Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn);

/// Maps every attack label to positive and Normal to negative.
/// Throws std::invalid_argument on length mismatch.
Metrics evaluate(std::span<const Label> predictions, std::span<const Label> truth);
Metrics evaluate_binary(std::span<const bool> predicted_attack, std::span<const bool> actual_attack);

/// Row = truth, column = prediction, indexed by the order of `classes`.
struct ConfusionMatrix {
  std::vector<Label> classes;
  std::vector<std::vector<std::uint64_t>> counts;

  double accuracy() const;
  /// Mean per-class recall over classes present in the truth.
  double macro_accuracy() const;
};

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truth,
                          std::vector<Label> classes);

}  // namespace plcguard::detect
