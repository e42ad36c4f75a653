#include "nids/tree.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "nids/error.hpp"

namespace nids {

namespace {

// Splits whose normalized gain does not clear this margin are treated as
// zero-gain; it only absorbs rounding noise in the weighted sums.
constexpr double gain_epsilon = 1e-12;

double gini_from_weighted(std::span<const double> weighted, double total) {
  if (!(total > 0.0)) return 0.0;
  double sum_sq = 0.0;
  for (double w : weighted) {
    const double p = w / total;
    sum_sq += p * p;
  }
  return std::max(0.0, 1.0 - sum_sq);
}

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // W_node * g - W_L * g_L - W_R * g_R
};

struct WorkItem {
  std::uint32_t node;
  std::size_t begin;
  std::size_t end;
};

}  // namespace

double gini_impurity(std::span<const double> counts, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != counts.size()) {
    throw ModelError("gini_impurity: counts and weights differ in length");
  }
  std::vector<double> weighted(counts.begin(), counts.end());
  double total = 0.0;
  for (std::size_t c = 0; c < weighted.size(); ++c) {
    if (counts[c] < 0.0) throw ModelError("gini_impurity: negative count");
    if (!weights.empty()) weighted[c] *= weights[c];
    total += weighted[c];
  }
  if (!(total > 0.0)) throw ModelError("gini_impurity: all class counts are zero");
  return gini_from_weighted(weighted, total);
}

std::vector<double> balanced_class_weights(std::span<const int> targets, std::size_t n_classes) {
  if (targets.empty()) throw ModelError("balanced_class_weights: no targets");
  std::vector<std::size_t> counts(n_classes, 0);
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= n_classes) {
      throw ModelError("balanced_class_weights: target outside class list");
    }
    ++counts[static_cast<std::size_t>(t)];
  }
  const auto present = static_cast<double>(
      std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
  const auto n = static_cast<double>(targets.size());
  std::vector<double> weights(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] > 0) weights[c] = n / (present * static_cast<double>(counts[c]));
  }
  return weights;
}

DecisionTree DecisionTree::fit(std::span<const FeatureVector> rows, std::span<const int> targets,
                               std::span<const std::size_t> sample,
                               std::span<const double> class_weights, const TreeParams& params,
                               std::mt19937_64& rng) {
  if (sample.empty()) throw ModelError("cannot fit a tree on an empty sample");
  if (rows.size() != targets.size()) throw ModelError("rows and targets differ in length");
  if (params.min_samples_split < 2 || params.min_samples_leaf < 1 || params.max_features < 1) {
    throw ModelError("invalid tree parameters");
  }
  const std::size_t n_classes = class_weights.size();
  if (n_classes == 0) throw ModelError("empty class list");
  for (auto s : sample) {
    if (s >= rows.size()) throw ModelError("sample index out of range");
    const int t = targets[s];
    if (t < 0 || static_cast<std::size_t>(t) >= n_classes) {
      throw ModelError("target outside class list");
    }
  }

  DecisionTree tree;
  tree.n_classes_ = n_classes;

  std::vector<std::size_t> index(sample.begin(), sample.end());
  double root_weight = 0.0;
  for (auto s : index) root_weight += class_weights[static_cast<std::size_t>(targets[s])];

  std::vector<double> node_counts(n_classes);
  std::vector<double> left_counts(n_classes);
  std::vector<double> right_counts(n_classes);
  std::vector<std::pair<double, std::size_t>> sorted;
  std::vector<std::size_t> features(feature_count);

  const auto make_leaf = [&](std::uint32_t node, double total) {
    auto& n = tree.nodes_[node];
    n.feature = -1;
    n.leaf = static_cast<std::uint32_t>(tree.leaf_probs_.size() / n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      tree.leaf_probs_.push_back(total > 0.0 ? node_counts[c] / total : 0.0);
    }
  };

  tree.nodes_.emplace_back();
  std::vector<WorkItem> stack{{0, 0, index.size()}};
  while (!stack.empty()) {
    const auto item = stack.back();
    stack.pop_back();
    const std::size_t n_rows = item.end - item.begin;

    std::fill(node_counts.begin(), node_counts.end(), 0.0);
    for (std::size_t i = item.begin; i < item.end; ++i) {
      const auto c = static_cast<std::size_t>(targets[index[i]]);
      node_counts[c] += class_weights[c];
    }
    const double node_weight = std::accumulate(node_counts.begin(), node_counts.end(), 0.0);
    const auto classes_here =
        std::count_if(node_counts.begin(), node_counts.end(), [](double w) { return w > 0.0; });

    if (classes_here <= 1 || n_rows < params.min_samples_split ||
        n_rows < 2 * params.min_samples_leaf) {
      make_leaf(item.node, node_weight);
      continue;
    }
    const double node_gini = gini_from_weighted(node_counts, node_weight);

    Split best;
    bool found = false;
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::size_t examined = 0;
    for (std::size_t k = 0; k < feature_count && examined < params.max_features; ++k) {
      // Incremental Fisher-Yates: features[k] becomes the next random draw.
      std::uniform_int_distribution<std::size_t> pick(k, feature_count - 1);
      std::swap(features[k], features[pick(rng)]);
      const std::size_t f = features[k];

      sorted.clear();
      for (std::size_t i = item.begin; i < item.end; ++i) {
        sorted.emplace_back(rows[index[i]][f], index[i]);
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant here
      ++examined;

      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double left_weight = 0.0;
      for (std::size_t i = 0; i + 1 < n_rows; ++i) {
        const auto c = static_cast<std::size_t>(targets[sorted[i].second]);
        left_counts[c] += class_weights[c];
        left_weight += class_weights[c];
        if (sorted[i].first == sorted[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        if (n_left < params.min_samples_leaf || n_rows - n_left < params.min_samples_leaf) continue;

        for (std::size_t cc = 0; cc < n_classes; ++cc) {
          right_counts[cc] = std::max(0.0, node_counts[cc] - left_counts[cc]);
        }
        const double right_weight = std::max(0.0, node_weight - left_weight);
        const double score = node_weight * node_gini -
                             left_weight * gini_from_weighted(left_counts, left_weight) -
                             right_weight * gini_from_weighted(right_counts, right_weight);
        if (!found || score > best.score) {
          const double lo = sorted[i].first;
          const double hi = sorted[i + 1].first;
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = Split{static_cast<std::int32_t>(f), threshold, score};
          found = true;
        }
      }
    }

    if (!found || !(best.score / root_weight > params.min_impurity_decrease + gain_epsilon)) {
      make_leaf(item.node, node_weight);
      continue;
    }

    const auto f = static_cast<std::size_t>(best.feature);
    const auto mid = std::stable_partition(
        index.begin() + static_cast<std::ptrdiff_t>(item.begin),
        index.begin() + static_cast<std::ptrdiff_t>(item.end),
        [&](std::size_t r) { return rows[r][f] <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - index.begin());

    const auto left_id = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    tree.nodes_.emplace_back();
    auto& node = tree.nodes_[item.node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = left_id + 1;
    stack.push_back({left_id + 1, split_at, item.end});
    stack.push_back({left_id, item.begin, split_at});
  }
  return tree;
}

std::span<const double> DecisionTree::leaf_distribution(const FeatureVector& x) const {
  std::uint32_t at = 0;
  while (!nodes_[at].is_leaf()) {
    const auto& n = nodes_[at];
    at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return std::span<const double>(leaf_probs_).subspan(nodes_[at].leaf * n_classes_, n_classes_);
}

int DecisionTree::predict(const FeatureVector& x) const {
  const auto probs = leaf_distribution(x);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[at].is_leaf()) {
      stack.emplace_back(nodes_[at].left, d + 1);
      stack.emplace_back(nodes_[at].right, d + 1);
    }
  }
  return deepest;
}

DecisionTree DecisionTree::from_parts(std::size_t n_classes, std::vector<TreeNode> nodes,
                                      std::vector<double> leaf_probs) {
  if (n_classes == 0 || nodes.empty() || leaf_probs.size() % n_classes != 0) {
    throw ModelError("malformed tree structure");
  }
  const auto n_leaves = leaf_probs.size() / n_classes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) {
      if (n.leaf >= n_leaves) throw ModelError("malformed tree structure: leaf index");
    } else if (static_cast<std::size_t>(n.feature) >= feature_count || n.left <= i ||
               n.right <= i || n.left >= nodes.size() || n.right >= nodes.size()) {
      throw ModelError("malformed tree structure: child index");
    }
  }
  DecisionTree tree;
  tree.n_classes_ = n_classes;
  tree.nodes_ = std::move(nodes);
  tree.leaf_probs_ = std::move(leaf_probs);
  return tree;
}

}  // namespace nids
