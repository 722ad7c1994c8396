#include "plcguard/lof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "plcguard/rng.hpp"

namespace plcguard::detect {

KnnIndex::KnnIndex(std::vector<Point2> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return points_[a][0] < points_[b][0] || (points_[a][0] == points_[b][0] && a < b);
  });
  sorted_x_.reserve(order_.size());
  for (auto i : order_) sorted_x_.push_back(points_[i][0]);
}

std::vector<Neighbor> KnnIndex::query(const Point2& q, std::size_t k, std::size_t skip) const {
  using Entry = std::pair<double, std::size_t>;  // (squared distance, index); max-heap on this key
  std::priority_queue<Entry> best;
  auto consider = [&](std::size_t idx) {
    if (idx == skip) return;
    const double dx = points_[idx][0] - q[0];
    const double dy = points_[idx][1] - q[1];
    const Entry e{dx * dx + dy * dy, idx};
    if (best.size() < k) {
      best.push(e);
    } else if (e < best.top()) {
      best.pop();
      best.push(e);
    }
  };
  auto worst = [&] { return best.size() < k ? std::numeric_limits<double>::infinity() : best.top().first; };

  const auto start = static_cast<std::size_t>(std::lower_bound(sorted_x_.begin(), sorted_x_.end(), q[0]) -
                                              sorted_x_.begin());
  std::size_t right = start;
  std::size_t left = start;  // next candidate on the left is left - 1
  bool right_open = right < order_.size();
  bool left_open = left > 0;
  while (right_open || left_open) {
    const double dr = right_open ? sorted_x_[right] - q[0] : std::numeric_limits<double>::infinity();
    const double dl = left_open ? q[0] - sorted_x_[left - 1] : std::numeric_limits<double>::infinity();
    const bool go_right = dr <= dl;
    const double dx = go_right ? dr : dl;
    if (dx * dx > worst()) break;
    if (go_right) {
      consider(order_[right]);
      right_open = ++right < order_.size();
    } else {
      consider(order_[left - 1]);
      left_open = --left > 0;
    }
  }

  std::vector<Neighbor> out(best.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = {best.top().second, std::sqrt(best.top().first)};
    best.pop();
  }
  return out;
}

namespace {

// Densities from precomputed neighbour lists (each list sorted, length >= k).
void densities(const std::vector<std::vector<Neighbor>>& neighbors, std::size_t k, std::vector<double>& k_distance,
               std::vector<double>& lrd) {
  const std::size_t n = neighbors.size();
  k_distance.resize(n);
  lrd.resize(n);
  for (std::size_t i = 0; i < n; ++i) k_distance[i] = neighbors[i][k - 1].distance;
  for (std::size_t i = 0; i < n; ++i) {
    double reach = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& nb = neighbors[i][j];
      reach += std::max(k_distance[nb.index], nb.distance);
    }
    lrd[i] = reach > 0.0 ? std::min(double(k) / reach, kLrdCap) : kLrdCap;
  }
}

double query_lrd(const std::vector<Neighbor>& nb, std::size_t k, const std::vector<double>& k_distance) {
  double reach = 0.0;
  for (std::size_t j = 0; j < k; ++j) reach += std::max(k_distance[nb[j].index], nb[j].distance);
  return reach > 0.0 ? std::min(double(k) / reach, kLrdCap) : kLrdCap;
}

double neighbor_lrd_mean(const std::vector<Neighbor>& nb, std::size_t k, const std::vector<double>& lrd) {
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += lrd[nb[j].index];
  return s / double(k);
}

void self_scores_from(const std::vector<std::vector<Neighbor>>& neighbors, std::size_t k,
                      const std::vector<double>& lrd, std::vector<double>& out) {
  out.resize(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) out[i] = neighbor_lrd_mean(neighbors[i], k, lrd) / lrd[i];
}

double score_from(const std::vector<Neighbor>& nb, std::size_t k, const std::vector<double>& k_distance,
                  const std::vector<double>& lrd, const std::vector<double>& self_scores) {
  if (nb.front().distance == 0.0) return self_scores[nb.front().index];
  return neighbor_lrd_mean(nb, k, lrd) / query_lrd(nb, k, k_distance);
}

std::vector<std::vector<Neighbor>> training_neighbors(const KnnIndex& index, std::size_t k) {
  std::vector<std::vector<Neighbor>> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = index.query(index.points()[i], k, i);
  return out;
}

}  // namespace

LofModel LofModel::fit(std::vector<Point2> points, std::size_t k) {
  if (k < 1) throw std::invalid_argument("fit_lof: k must be at least 1");
  if (points.size() <= k)
    throw std::invalid_argument("fit_lof: need more than k=" + std::to_string(k) + " points, got " +
                                std::to_string(points.size()));
  LofModel m;
  m.k_ = k;
  m.index_ = KnnIndex(std::move(points));
  const auto nb = training_neighbors(m.index_, k);
  densities(nb, k, m.k_distance_, m.lrd_);
  self_scores_from(nb, k, m.lrd_, m.self_scores_);
  return m;
}

LofModel LofModel::restore(std::vector<Point2> points, std::size_t k, double threshold,
                           std::vector<double> k_distance, std::vector<double> lrd) {
  if (k < 1 || points.size() <= k) throw std::invalid_argument("LofModel::restore: invalid k for point count");
  if (k_distance.size() != points.size() || lrd.size() != points.size())
    throw std::invalid_argument("LofModel::restore: cached arrays do not match point count");
  LofModel m;
  m.k_ = k;
  m.threshold_ = threshold;
  m.index_ = KnnIndex(std::move(points));
  m.k_distance_ = std::move(k_distance);
  m.lrd_ = std::move(lrd);
  m.compute_self_scores();
  return m;
}

void LofModel::compute_self_scores() {
  self_scores_from(training_neighbors(index_, k_), k_, lrd_, self_scores_);
}

double LofModel::score(const Point2& point) const {
  return score_from(index_.query(point, k_), k_, k_distance_, lrd_, self_scores_);
}

LofModel fit_lof(std::vector<Point2> benign_embeddings, std::size_t k) {
  return LofModel::fit(std::move(benign_embeddings), k);
}

double lof_score(const LofModel& model, const Point2& point) { return model.score(point); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (double(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - double(lo)) * (values[lo + 1] - values[lo]);
}

double calibrate_threshold(LofModel& model, std::span<const Point2> holdout_benign, double q) {
  if (holdout_benign.empty()) throw std::invalid_argument("calibrate_threshold: empty holdout");
  std::vector<double> scores;
  scores.reserve(holdout_benign.size());
  for (const auto& p : holdout_benign) scores.push_back(model.score(p));
  const double tau = std::max(quantile(std::move(scores), q), kThresholdFloor);
  model.set_threshold(tau);
  return tau;
}

TuneResult tune_k(std::span<const Point2> train_benign, std::span<const Point2> validation,
                  std::span<const Label> validation_labels, const TuneConfig& config) {
  if (validation.size() != validation_labels.size())
    throw std::invalid_argument("tune_k: validation label count mismatch");
  if (config.k_min < 1 || config.k_max < config.k_min) throw std::invalid_argument("tune_k: bad k range");
  if (config.repeats == 0) throw std::invalid_argument("tune_k: repeats must be positive");
  const bool has_attack = std::any_of(validation_labels.begin(), validation_labels.end(), is_attack);
  const bool has_normal = std::any_of(validation_labels.begin(), validation_labels.end(),
                                      [](Label l) { return !is_attack(l); });
  if (!has_attack || !has_normal) throw std::invalid_argument("tune_k: validation must contain both classes");

  const std::size_t n_hold = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.holdout_fraction * double(train_benign.size()))));
  if (train_benign.size() <= n_hold + config.k_max)
    throw std::invalid_argument("tune_k: not enough benign points for k_max");

  const std::size_t n_k = config.k_max - config.k_min + 1;
  std::vector<double> fn_sum(n_k, 0.0), fp_sum(n_k, 0.0);

  for (std::size_t r = 0; r < config.repeats; ++r) {
    std::vector<std::size_t> perm(train_benign.size());
    std::iota(perm.begin(), perm.end(), 0);
    SplitRng rng(derive_seed(config.seed, r));
    shuffle(perm, rng);
    // Keep original insertion order inside each part for tie-breaking.
    std::vector<std::size_t> fit_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
    std::vector<std::size_t> hold_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::sort(fit_idx.begin(), fit_idx.end());
    std::sort(hold_idx.begin(), hold_idx.end());
    std::vector<Point2> fit_pts;
    fit_pts.reserve(fit_idx.size());
    for (auto i : fit_idx) fit_pts.push_back(train_benign[i]);

    // Neighbour lists at k_max serve every smaller k as prefixes.
    const KnnIndex index(std::move(fit_pts));
    const auto train_nb = training_neighbors(index, config.k_max);
    std::vector<std::vector<Neighbor>> hold_nb, val_nb;
    for (auto i : hold_idx) hold_nb.push_back(index.query(train_benign[i], config.k_max));
    for (const auto& p : validation) val_nb.push_back(index.query(p, config.k_max));

    std::vector<double> kd, lrd, self;
    for (std::size_t ki = 0; ki < n_k; ++ki) {
      const std::size_t k = config.k_min + ki;
      densities(train_nb, k, kd, lrd);
      self_scores_from(train_nb, k, lrd, self);
      std::vector<double> hold_scores;
      hold_scores.reserve(hold_nb.size());
      for (const auto& nb : hold_nb) hold_scores.push_back(score_from(nb, k, kd, lrd, self));
      const double tau = std::max(quantile(std::move(hold_scores), config.quantile), kThresholdFloor);
      std::size_t fn = 0, fp = 0;
      for (std::size_t v = 0; v < val_nb.size(); ++v) {
        const bool flagged = score_from(val_nb[v], k, kd, lrd, self) > tau;
        if (is_attack(validation_labels[v]) && !flagged) ++fn;
        if (!is_attack(validation_labels[v]) && flagged) ++fp;
      }
      fn_sum[ki] += double(fn);
      fp_sum[ki] += double(fp);
    }
  }

  TuneResult result;
  for (std::size_t ki = 0; ki < n_k; ++ki)
    result.sweep.push_back({config.k_min + ki, fn_sum[ki] / double(config.repeats), fp_sum[ki] / double(config.repeats)});
  const KSweepRow* best = &result.sweep.front();
  for (const auto& row : result.sweep) {
    if (row.mean_false_negatives < best->mean_false_negatives ||
        (row.mean_false_negatives == best->mean_false_negatives &&
         row.mean_false_positives < best->mean_false_positives))
      best = &row;
  }
  result.best_k = best->k;
  return result;
}

}  // namespace plcguard::detect
