#include "nids/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nids/error.hpp"

namespace nids {

namespace {

inline double term(double diff, double p) noexcept {
  diff = std::fabs(diff);
  if (p == 1.0) return diff;
  if (p == 2.0) return diff * diff;
  return std::pow(diff, p);
}

}  // namespace

void KnnConfig::check() const {
  if (k < 1) throw ConfigError("knn.k must be at least 1");
  if (leaf_size < 1) throw ConfigError("knn.leaf_size must be at least 1");
  if (!(p >= 1.0)) throw ConfigError("knn.p must be at least 1");
}

KnnConfig KnnConfig::from(const KeyValueConfig& config) {
  KnnConfig out;
  const auto k = config.get_int("knn.k", static_cast<std::int64_t>(out.k));
  const auto leaf = config.get_int("knn.leaf_size", static_cast<std::int64_t>(out.leaf_size));
  if (k < 1) throw ConfigError("knn.k must be at least 1");
  if (leaf < 1) throw ConfigError("knn.leaf_size must be at least 1");
  out.k = static_cast<std::size_t>(k);
  out.leaf_size = static_cast<std::size_t>(leaf);
  out.p = config.get_double("knn.p", out.p);
  if (auto w = config.get("knn.weights"); w && *w != "uniform") {
    throw ConfigError("knn.weights supports only 'uniform'");
  }
  out.check();
  return out;
}

double minkowski_distance(std::span<const double> u, std::span<const double> v, double p) {
  if (u.size() != v.size()) throw ModelError("minkowski_distance: dimension mismatch");
  if (!(p >= 1.0)) throw ModelError("minkowski_distance: p must be at least 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += term(u[i] - v[i], p);
  if (p == 1.0) return sum;
  if (p == 2.0) return std::sqrt(sum);
  return std::pow(sum, 1.0 / p);
}

double minkowski_power_sum(const FeatureVector& u, const FeatureVector& v, double p) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < feature_count; ++i) sum += term(u[i] - v[i], p);
  return sum;
}

KdTree::KdTree(std::span<const FeatureVector> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(1, leaf_size)), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) build(0, points_.size());
}

std::uint32_t KdTree::build(std::size_t begin, std::size_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = points_[order_[begin]];
  node.hi = node.lo;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& x = points_[order_[i]];
    for (std::size_t d = 0; d < feature_count; ++d) {
      node.lo[d] = std::min(node.lo[d], x[d]);
      node.hi[d] = std::max(node.hi[d], x[d]);
    }
  }
  if (end - begin > leaf_size_) {
    std::size_t dim = 0;
    for (std::size_t d = 1; d < feature_count; ++d) {
      if (node.hi[d] - node.lo[d] > node.hi[dim] - node.lo[dim]) dim = d;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    // (value, row) is a total order, so the partition does not depend on the
    // library's nth_element strategy.
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       const double va = points_[a][dim], vb = points_[b][dim];
                       return va < vb || (va == vb && a < b);
                     });
    node.leaf = false;
    node.left = build(begin, mid);
    node.right = build(mid, end);
  }
  nodes_[id] = node;
  return id;
}

void KdTree::search(std::uint32_t id, const FeatureVector& q, std::size_t k, double p,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[id];
  if (node.leaf) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], minkowski_power_sum(q, points_[order_[i]], p)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const auto bound = [&](const Node& n) {
    double sum = 0.0;
    for (std::size_t d = 0; d < feature_count; ++d) {
      double gap = 0.0;
      if (q[d] < n.lo[d]) {
        gap = n.lo[d] - q[d];
      } else if (q[d] > n.hi[d]) {
        gap = q[d] - n.hi[d];
      }
      sum += term(gap, p);
    }
    return sum;
  };
  std::uint32_t first = node.left, second = node.right;
  double first_bound = bound(nodes_[first]), second_bound = bound(nodes_[second]);
  if (second_bound < first_bound) {
    std::swap(first, second);
    std::swap(first_bound, second_bound);
  }
  // Equal bounds are still visited: a tie at the k-th distance may hold a
  // lower row index.
  if (heap.size() < k || !(first_bound > heap.front().power_sum)) search(first, q, k, p, heap);
  if (heap.size() < k || !(second_bound > heap.front().power_sum)) search(second, q, k, p, heap);
}

std::vector<Neighbor> KdTree::query(const FeatureVector& q, std::size_t k, double p) const {
  std::vector<Neighbor> heap;
  if (nodes_.empty() || k == 0) return heap;
  heap.reserve(k);
  search(0, q, k, p, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

std::size_t KdTree::largest_leaf() const noexcept {
  std::size_t largest = 0;
  for (const auto& n : nodes_) {
    if (n.leaf) largest = std::max(largest, n.end - n.begin);
  }
  return largest;
}

KnnClassifier::KnnClassifier(const KnnClassifier& other)
    : config_(other.config_), n_classes_(other.n_classes_), rows_(other.rows_),
      labels_(other.labels_) {
  rebuild_index();
}

KnnClassifier& KnnClassifier::operator=(const KnnClassifier& other) {
  if (this != &other) {
    config_ = other.config_;
    n_classes_ = other.n_classes_;
    rows_ = other.rows_;
    labels_ = other.labels_;
    rebuild_index();
  }
  return *this;
}

void KnnClassifier::rebuild_index() { index_ = KdTree(rows_, config_.leaf_size); }

KnnClassifier KnnClassifier::fit(const Dataset& train, std::size_t n_classes,
                                 const KnnConfig& config, std::size_t max_rows) {
  config.check();
  if (train.empty()) throw ModelError("cannot fit KNN on an empty training set");
  if (train.size() > max_rows) {
    throw CapacityError("KNN training set of " + std::to_string(train.size()) +
                        " rows exceeds the memory budget of " + std::to_string(max_rows) + " rows");
  }
  if (config.k > train.size()) {
    throw ModelError("knn.k = " + std::to_string(config.k) + " exceeds the " +
                     std::to_string(train.size()) + " training rows");
  }
  return from_parts(config, n_classes, train.rows, train.targets);
}

KnnClassifier KnnClassifier::from_parts(KnnConfig config, std::size_t n_classes,
                                        std::vector<FeatureVector> rows, std::vector<int> labels) {
  config.check();
  if (rows.size() != labels.size()) throw ModelError("rows and labels differ in length");
  if (rows.empty() || config.k > rows.size()) throw ModelError("malformed KNN structure");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes) {
      throw ModelError("label outside class list");
    }
  }
  KnnClassifier knn;
  knn.config_ = config;
  knn.n_classes_ = n_classes;
  knn.rows_ = std::move(rows);
  knn.labels_ = std::move(labels);
  knn.rebuild_index();
  return knn;
}

std::vector<Neighbor> KnnClassifier::neighbors(const FeatureVector& x) const {
  return index_.query(x, config_.k, config_.p);
}

int vote(std::span<const Neighbor> ordered, std::span<const int> labels, std::size_t n_classes) {
  std::vector<std::size_t> count(n_classes, 0);
  std::vector<double> nearest(n_classes, 0.0);
  for (const auto& n : ordered) {
    const auto c = static_cast<std::size_t>(labels[n.index]);
    if (count[c]++ == 0) nearest[c] = n.power_sum;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    if (count[c] > count[best] ||
        (count[c] == count[best] && count[c] > 0 && nearest[c] < nearest[best])) {
      best = c;
    }
  }
  return static_cast<int>(best);
}

int KnnClassifier::predict(const FeatureVector& x) const {
  const auto ordered = neighbors(x);
  return vote(ordered, labels_, n_classes_);
}

}  // namespace nids
