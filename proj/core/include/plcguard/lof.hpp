#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "plcguard/types.hpp"

namespace plcguard::detect {

using Point2 = std::array<double, 2>;

/// Cap on local reachability density when a neighbourhood has zero total
/// reachability distance (duplicate points).
inline constexpr double kLrdCap = 1e12;
inline constexpr double kThresholdFloor = 1.1;

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Exact k-nearest-neighbour search over a fixed 2-D point set. Neighbours
/// are ordered by (distance, insertion index).
class KnnIndex {
 public:
  KnnIndex() = default;
  explicit KnnIndex(std::vector<Point2> points);

  /// k nearest points to q, optionally skipping one index.
  std::vector<Neighbor> query(const Point2& q, std::size_t k, std::size_t skip = SIZE_MAX) const;

  const std::vector<Point2>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<Point2> points_;
  std::vector<std::size_t> order_;  // indices sorted by (x, index)
  std::vector<double> sorted_x_;
};

/// Novelty-mode Local Outlier Factor model fitted on benign embeddings.
class LofModel {
 public:
  LofModel() = default;

  /// Throws std::invalid_argument unless 1 <= k < points.size().
  static LofModel fit(std::vector<Point2> points, std::size_t k);

  /// Rebuild from serialized state (points, k, threshold, cached densities).
  static LofModel restore(std::vector<Point2> points, std::size_t k, double threshold,
                          std::vector<double> k_distance, std::vector<double> lrd);

  /// mean(lrd of the k nearest training points) / lrd(point). A query that
  /// coincides with a training point gets that point's self-score.
  double score(const Point2& point) const;

  /// Self-score of training point i (neighbours exclude the point itself).
  double training_score(std::size_t i) const { return self_scores_[i]; }

  std::size_t k() const { return k_; }
  double threshold() const { return threshold_; }
  void set_threshold(double tau) { threshold_ = tau; }
  bool is_anomalous(double s) const { return s > threshold_; }

  const std::vector<Point2>& points() const { return index_.points(); }
  const std::vector<double>& k_distance() const { return k_distance_; }
  const std::vector<double>& lrd() const { return lrd_; }

 private:
  void compute_self_scores();

  KnnIndex index_;
  std::size_t k_ = 0;
  double threshold_ = kThresholdFloor;
  std::vector<double> k_distance_;
  std::vector<double> lrd_;
  std::vector<double> self_scores_;
};

LofModel fit_lof(std::vector<Point2> benign_embeddings, std::size_t k);
double lof_score(const LofModel& model, const Point2& point);

/// Linear-interpolation quantile (q in [0, 1]) of a non-empty sample.
double quantile(std::vector<double> values, double q);

/// tau = max(quantile(holdout scores, q), 1.1); stored in the model.
double calibrate_threshold(LofModel& model, std::span<const Point2> holdout_benign, double q = 0.999);

struct TuneConfig {
  std::size_t k_min = 5;
  std::size_t k_max = 24;
  std::size_t repeats = 20;
  double holdout_fraction = 0.2;
  double quantile = 0.999;
  std::uint64_t seed = 1;
};

struct KSweepRow {
  std::size_t k = 0;
  double mean_false_negatives = 0.0;
  double mean_false_positives = 0.0;
};

struct TuneResult {
  std::size_t best_k = 0;
  std::vector<KSweepRow> sweep;
};

/// Sweeps k over [k_min, k_max]; for each k and each seeded resplit of the
/// benign data fits, calibrates and scores the validation set. Picks the
/// lowest mean FN, then lowest mean FP, then the smallest k.
TuneResult tune_k(std::span<const Point2> train_benign, std::span<const Point2> validation,
                  std::span<const Label> validation_labels, const TuneConfig& config);

}  // namespace plcguard::detect
