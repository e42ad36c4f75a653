#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nids/config.hpp"
#include "nids/flow.hpp"

namespace nids {

struct KnnConfig {
  std::size_t k = 3;
  std::size_t leaf_size = 30;
  double p = 2.0;  // Minkowski exponent

  void check() const;
  static KnnConfig from(const KeyValueConfig& config);

  bool operator==(const KnnConfig&) const = default;
};

// (sum_i |u_i - v_i|^p)^(1/p). Throws ModelError on dimension mismatch or p < 1.
double minkowski_distance(std::span<const double> u, std::span<const double> v, double p);

// sum_i |u_i - v_i|^p: same ordering as the distance, without the final root.
double minkowski_power_sum(const FeatureVector& u, const FeatureVector& v, double p) noexcept;

struct Neighbor {
  std::size_t index = 0;  // training row
  double power_sum = 0.0;

  // Nearest first; equal distances rank by training row.
  friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
    return a.power_sum < b.power_sum || (a.power_sum == b.power_sum && a.index < b.index);
  }
};

// Exact k-NN index: axis-aligned binary partition with bounding boxes, split
// on the widest dimension at the median; leaves hold at most leaf_size points.
class KdTree {
public:
  KdTree() = default;
  KdTree(std::span<const FeatureVector> points, std::size_t leaf_size);

  // The k nearest (or all, when fewer), ordered nearest first.
  std::vector<Neighbor> query(const FeatureVector& q, std::size_t k, double p) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t largest_leaf() const noexcept;

private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    bool leaf = true;
    FeatureVector lo{};
    FeatureVector hi{};
  };

  std::uint32_t build(std::size_t begin, std::size_t end);
  void search(std::uint32_t node, const FeatureVector& q, std::size_t k, double p,
              std::vector<Neighbor>& heap) const;

  std::span<const FeatureVector> points_;
  std::size_t leaf_size_ = 30;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

class KnnClassifier {
public:
  KnnClassifier() = default;
  KnnClassifier(const KnnClassifier& other);
  KnnClassifier& operator=(const KnnClassifier& other);
  KnnClassifier(KnnClassifier&&) noexcept = default;
  KnnClassifier& operator=(KnnClassifier&&) noexcept = default;

  // Throws ModelError when the training set is empty or smaller than k, and
  // CapacityError when `max_rows` is exceeded.
  static KnnClassifier fit(const Dataset& train, std::size_t n_classes, const KnnConfig& config,
                           std::size_t max_rows = SIZE_MAX);
  static KnnClassifier from_parts(KnnConfig config, std::size_t n_classes,
                                  std::vector<FeatureVector> rows, std::vector<int> labels);

  // Majority among the k nearest. Count ties go to the tied class whose
  // nearest member is closest, then to the lowest class index.
  int predict(const FeatureVector& x) const;
  std::vector<Neighbor> neighbors(const FeatureVector& x) const;

  const KnnConfig& config() const noexcept { return config_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<FeatureVector>& rows() const noexcept { return rows_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const KdTree& index() const noexcept { return index_; }

private:
  void rebuild_index();

  KnnConfig config_;
  std::size_t n_classes_ = 0;
  std::vector<FeatureVector> rows_;
  std::vector<int> labels_;
  KdTree index_;
};

// Class vote over an ordered neighbour list, with the tie rules above.
int vote(std::span<const Neighbor> ordered, std::span<const int> labels, std::size_t n_classes);

}  // namespace nids
