#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nids/flow.hpp"

namespace nids {

// 1 - sum_c p_c^2 with p_c proportional to counts[c] * weights[c]. An empty
// `weights` span means uniform weights. Throws ModelError on all-zero counts.
double gini_impurity(std::span<const double> counts, std::span<const double> weights = {});

// n / (C * n_c) for each class present; classes absent from `targets` get 0.
std::vector<double> balanced_class_weights(std::span<const int> targets, std::size_t n_classes);

struct TreeParams {
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = feature_count;
  double min_impurity_decrease = 0.0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t leaf = 0;  // row of the leaf probability table

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// CART classification tree with Gini splits on midpoint thresholds.
class DecisionTree {
public:
  DecisionTree() = default;

  // Grows a tree over rows[sample[i]]. `sample` may repeat indices (bootstrap).
  // `class_weights` holds one weight per class.
  static DecisionTree fit(std::span<const FeatureVector> rows, std::span<const int> targets,
                          std::span<const std::size_t> sample,
                          std::span<const double> class_weights, const TreeParams& params,
                          std::mt19937_64& rng);

  // Argmax of the leaf distribution; ties go to the lowest class index.
  int predict(const FeatureVector& x) const;
  std::span<const double> leaf_distribution(const FeatureVector& x) const;

  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& leaf_table() const noexcept { return leaf_probs_; }
  std::size_t depth() const;

  static DecisionTree from_parts(std::size_t n_classes, std::vector<TreeNode> nodes,
                                 std::vector<double> leaf_probs);

  bool operator==(const DecisionTree&) const = default;

private:
  std::size_t n_classes_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_probs_;  // n_leaves x n_classes, row-major
};

}  // namespace nids
