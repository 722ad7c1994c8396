#include "plcguard/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "plcguard/rng.hpp"

namespace plcguard::detect {

std::size_t DecisionTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  const auto& votes = nodes[i].votes;
  return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

namespace {

struct TreeBuild {
  DecisionTree tree;
  std::vector<double> importance;  // unnormalised impurity decrease
  std::vector<std::uint8_t> in_bag;
};

struct SplitCandidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = -1.0;  // sum_c nl_c^2/nl + sum_c nr_c^2/nr, larger is better
};

class TreeBuilder {
 public:
  TreeBuilder(const DenseMatrix& x, std::span<const std::size_t> y, std::size_t n_classes, std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), rng_(seed) {
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(double(x.cols())))));
  }

  TreeBuild build() {
    const std::size_t n = x_.rows();
    TreeBuild out;
    out.importance.assign(x_.cols(), 0.0);
    out.in_bag.assign(n, 0);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) {
      s = uniform_index(rng_, n);
      out.in_bag[s] = 1;
    }

    struct Pending {
      std::size_t node;
      std::size_t begin, end;
    };
    out.tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, n}};
    std::vector<std::size_t> features(x_.cols());
    while (!stack.empty()) {
      auto job = stack.back();
      stack.pop_back();
      std::span<std::size_t> idx(sample.data() + job.begin, job.end - job.begin);
      auto counts = class_counts(idx);
      const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
      SplitCandidate best;
      if (!pure && idx.size() >= 2) {
        std::iota(features.begin(), features.end(), 0);
        // Draw features without replacement; keep drawing past mtry only
        // until at least one usable split exists.
        for (std::size_t k = 0; k < features.size(); ++k) {
          std::swap(features[k], features[k + uniform_index(rng_, features.size() - k)]);
          evaluate_feature(idx, features[k], counts, best);
          if (k + 1 >= mtry_ && best.valid) break;
        }
      }
      if (!best.valid) {
        auto& leaf = out.tree.nodes[job.node];
        leaf.feature = -1;
        leaf.votes.assign(counts.begin(), counts.end());
        continue;
      }
      auto mid = std::partition(idx.begin(), idx.end(),
                                [&](std::size_t s) { return x_(s, best.feature) <= best.threshold; });
      const auto n_left = static_cast<std::size_t>(mid - idx.begin());
      const double parent = double(idx.size()) - sum_sq(counts) / double(idx.size());
      const double children = double(idx.size()) - best.score;
      out.importance[best.feature] += parent - children;

      const auto left = out.tree.nodes.size();
      out.tree.nodes.emplace_back();
      out.tree.nodes.emplace_back();
      auto& node = out.tree.nodes[job.node];
      node.feature = static_cast<std::int32_t>(best.feature);
      node.threshold = best.threshold;
      node.left = static_cast<std::int32_t>(left);
      node.right = static_cast<std::int32_t>(left + 1);
      stack.push_back({left + 1, job.begin + n_left, job.end});
      stack.push_back({left, job.begin, job.begin + n_left});
    }
    return out;
  }

 private:
  std::vector<std::uint32_t> class_counts(std::span<const std::size_t> idx) const {
    std::vector<std::uint32_t> c(n_classes_, 0);
    for (auto s : idx) ++c[y_[s]];
    return c;
  }

  static double sum_sq(const std::vector<std::uint32_t>& c) {
    double s = 0.0;
    for (auto v : c) s += double(v) * double(v);
    return s;
  }

  void evaluate_feature(std::span<const std::size_t> idx, std::size_t feature,
                        const std::vector<std::uint32_t>& total, SplitCandidate& best) {
    buffer_.clear();
    for (auto s : idx) buffer_.emplace_back(x_(s, feature), y_[s]);
    std::sort(buffer_.begin(), buffer_.end());
    if (buffer_.front().first == buffer_.back().first) return;

    left_.assign(n_classes_, 0);
    right_.assign(total.begin(), total.end());
    double left_sq = 0.0;
    double right_sq = sum_sq(total);
    const std::size_t n = buffer_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = buffer_[i].second;
      left_sq += 2.0 * left_[c] + 1.0;
      ++left_[c];
      right_sq -= 2.0 * right_[c] - 1.0;
      --right_[c];
      const double a = buffer_[i].first;
      const double b = buffer_[i + 1].first;
      if (a == b) continue;
      const double nl = double(i + 1);
      const double nr = double(n - i - 1);
      const double score = left_sq / nl + right_sq / nr;
      if (!best.valid || score > best.score) {
        double t = a + (b - a) / 2.0;
        if (!(t < b)) t = a;
        best = {true, feature, t, score};
      }
    }
  }

  const DenseMatrix& x_;
  std::span<const std::size_t> y_;
  std::size_t n_classes_;
  std::size_t mtry_;
  SplitRng rng_;
  std::vector<std::pair<double, std::size_t>> buffer_;
  std::vector<std::uint32_t> left_, right_;
};

}  // namespace

ForestModel train_forest(const DenseMatrix& rows, std::span<const Label> labels, const ForestConfig& config,
                         std::vector<std::string> feature_names) {
  if (rows.empty()) throw std::invalid_argument("train_forest: no training rows");
  if (labels.size() != rows.rows()) throw std::invalid_argument("train_forest: label count mismatch");
  if (config.n_trees == 0) throw std::invalid_argument("train_forest: n_trees must be positive");
  if (!feature_names.empty() && feature_names.size() != rows.cols())
    throw std::invalid_argument("train_forest: feature name count mismatch");

  ForestModel model;
  model.seed = config.seed;
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty())
    for (std::size_t c = 0; c < rows.cols(); ++c) model.feature_names.push_back("f" + std::to_string(c));
  {
    std::vector<Label> present(labels.begin(), labels.end());
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    model.classes = present;
  }
  if (model.classes.size() < 2) throw std::invalid_argument("train_forest: need at least two classes");

  std::vector<std::size_t> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    y[i] = static_cast<std::size_t>(std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]) -
                                    model.classes.begin());

  std::vector<TreeBuild> built(config.n_trees);
  std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, config.n_trees);
  auto work = [&](std::size_t w) {
    for (std::size_t t = w; t < config.n_trees; t += workers) {
      TreeBuilder builder(rows, y, model.classes.size(), derive_seed(config.seed, t));
      built[t] = builder.build();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  model.importances.assign(rows.cols(), 0.0);
  std::vector<std::vector<std::uint32_t>> oob_votes(rows.rows(), std::vector<std::uint32_t>(model.classes.size(), 0));
  for (auto& b : built) {
    for (std::size_t f = 0; f < rows.cols(); ++f) model.importances[f] += b.importance[f];
    for (std::size_t r = 0; r < rows.rows(); ++r)
      if (!b.in_bag[r]) ++oob_votes[r][b.tree.predict(rows.row(r))];
    model.trees.push_back(std::move(b.tree));
  }
  const double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
  if (total > 0)
    for (auto& v : model.importances) v /= total;

  std::size_t oob_n = 0, oob_wrong = 0;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto& v = oob_votes[r];
    if (std::all_of(v.begin(), v.end(), [](auto c) { return c == 0; })) continue;
    ++oob_n;
    const auto pred = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    if (pred != y[r]) ++oob_wrong;
  }
  if (oob_n > 0) model.oob_error = double(oob_wrong) / double(oob_n);
  return model;
}

Classification classify(const ForestModel& model, std::span<const double> row) {
  if (row.size() != model.feature_names.size())
    throw std::invalid_argument("classify: row has " + std::to_string(row.size()) + " features, model expects " +
                                std::to_string(model.feature_names.size()));
  if (model.trees.empty()) throw std::invalid_argument("classify: empty forest");
  std::vector<std::uint32_t> votes(model.classes.size(), 0);
  for (const auto& t : model.trees) ++votes[t.predict(row)];
  Classification out;
  const auto best = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  out.label = model.classes[best];
  out.vote_fractions.resize(votes.size());
  for (std::size_t c = 0; c < votes.size(); ++c)
    out.vote_fractions[c] = double(votes[c]) / double(model.trees.size());
  return out;
}

std::vector<Label> predict_all(const ForestModel& model, const DenseMatrix& rows) {
  std::vector<Label> out;
  out.reserve(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out.push_back(classify(model, rows.row(r)).label);
  return out;
}

}  // namespace plcguard::detect
