#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plcguard/matrix.hpp"
#include "plcguard/telemetry.hpp"

namespace plcguard::detect {
struct ForestConfig;
}

namespace plcguard::preprocess {

using telemetry::FeatureArray;
using telemetry::FeatureVector;
using telemetry::kFeatureCount;

struct FeatureBound {
  double min = 0.0;
  double max = 0.0;
};

struct MinMaxBounds {
  std::array<FeatureBound, kFeatureCount> bounds{};
};

/// Column-wise bounds. Throws std::invalid_argument on an empty dataset.
MinMaxBounds fit_minmax(std::span<const FeatureVector> dataset);

/// (x - min) / (max - min) clipped to [0, 1]; constant columns map to 0.
FeatureArray apply_minmax(const FeatureVector& v, const MinMaxBounds& b);
DenseMatrix apply_minmax(std::span<const FeatureVector> rows, const MinMaxBounds& b);

struct PcaModel {
  std::vector<double> mean;                     // one entry per input column
  std::vector<std::vector<double>> components;  // orthonormal, ordered by decreasing variance
  std::vector<double> eigenvalues;              // sample-covariance eigenvalues of the kept components
  std::vector<double> explained_variance_ratio;
};

/// Mean-centres, eigendecomposes the sample covariance and keeps the top
/// components. Each component's largest-magnitude loading is made positive.
PcaModel fit_pca(const DenseMatrix& normalized, std::size_t n_components = 2);

/// (v - mean) . components. Throws std::invalid_argument on arity mismatch.
std::vector<double> project(std::span<const double> v, const PcaModel& m);

/// Pearson correlation of two columns; 0 when either column is constant.
double pearson(const DenseMatrix& data, std::size_t a, std::size_t b);

/// Scans columns in order and keeps a column only if |r| <= threshold against
/// every column already kept. Returns kept column indices (ascending).
std::vector<std::size_t> fit_correlation_filter(const DenseMatrix& data, double threshold = 0.9);

struct RfeStep {
  std::vector<std::size_t> columns;  // indices into the input matrix
  double validation_accuracy = 0.0;
  double oob_error = 0.0;
};

struct RfeResult {
  std::vector<std::size_t> selected;  // indices into the input matrix
  double selected_accuracy = 0.0;
  std::vector<RfeStep> trace;         // one step per subset size, largest first
};

/// Recursive feature elimination driven by forest validation accuracy and
/// mean-decrease-in-impurity importance. Uses a stratified 75/25 split of
/// the given rows.
RfeResult run_rfe(const DenseMatrix& data, std::span<const Label> labels, const detect::ForestConfig& config);

/// Stratified split into (train, validation) row indices. Deterministic given seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const Label> labels,
                                                                              double train_fraction,
                                                                              std::uint64_t seed);

/// What the pipeline-II stage kept, by feature name.
struct FeatureSelection {
  std::vector<std::string> kept_after_correlation;
  std::vector<std::string> kept_after_rfe;
  std::vector<double> rfe_accuracy_trace;
};

}  // namespace plcguard::preprocess
