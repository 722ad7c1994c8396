#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plcguard/matrix.hpp"
#include "plcguard/types.hpp"

namespace plcguard::detect {

struct ForestConfig {
  std::size_t n_trees = 200;
  std::uint64_t seed = 1;
  /// 0 = hardware concurrency. Results do not depend on this value.
  std::size_t threads = 0;
};

/// Flat node table entry. A node is a leaf when feature < 0; leaves carry
/// per-class counts of the bootstrap samples that reached them.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint32_t> votes;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  /// Index into ForestModel::classes of the leaf majority (ties -> lowest index).
  std::size_t predict(std::span<const double> row) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_names;
  std::vector<Label> classes;  // ascending Label order
  std::uint64_t seed = 0;
  /// Mean decrease in Gini impurity per feature, normalised to sum to 1.
  std::vector<double> importances;
  /// Out-of-bag error rate on the training rows; negative when undefined.
  double oob_error = -1.0;
};

struct Classification {
  Label label = Label::Normal;
  std::vector<double> vote_fractions;  // aligned with ForestModel::classes
};

/// Bootstrap-aggregated CART forest: floor(sqrt(d)) candidate features per
/// node, best Gini split, grown until pure or fewer than 2 samples.
/// Throws std::invalid_argument on empty input or fewer than 2 classes.
ForestModel train_forest(const DenseMatrix& rows, std::span<const Label> labels, const ForestConfig& config,
                         std::vector<std::string> feature_names = {});

/// Majority vote across trees; ties broken by the fixed label order.
Classification classify(const ForestModel& model, std::span<const double> row);

std::vector<Label> predict_all(const ForestModel& model, const DenseMatrix& rows);

}  // namespace plcguard::detect
