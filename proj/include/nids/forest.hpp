#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nids/config.hpp"
#include "nids/flow.hpp"
#include "nids/tree.hpp"

namespace nids {

enum class ClassWeighting : std::uint8_t { balanced, uniform };
enum class MaxFeatures : std::uint8_t { sqrt, all };

struct ForestConfig {
  std::size_t n_estimators = 10;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features = MaxFeatures::sqrt;
  double min_impurity_decrease = 0.0;
  ClassWeighting class_weight = ClassWeighting::balanced;
  std::uint64_t seed = 0;

  void check() const;
  // ceil(sqrt(n_features)) under the sqrt rule.
  std::size_t features_per_split() const noexcept;

  // Reads forest.* keys; `seed` is the fallback for forest.seed.
  static ForestConfig from(const KeyValueConfig& config);

  bool operator==(const ForestConfig&) const = default;
};

class RandomForest {
public:
  RandomForest() = default;

  // Each tree sees a seeded bootstrap of size n. Trees are independent, so
  // `threads` only changes wall time, never the result.
  static RandomForest fit(const Dataset& train, std::size_t n_classes, const ForestConfig& config,
                          std::size_t threads = 1);

  // Hard majority vote; ties go to the lowest class index.
  int predict(const FeatureVector& x) const;
  std::vector<std::size_t> votes(const FeatureVector& x) const;

  const ForestConfig& config() const noexcept { return config_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const std::vector<double>& class_weights() const noexcept { return class_weights_; }

  static RandomForest from_parts(ForestConfig config, std::size_t n_classes,
                                 std::vector<double> class_weights,
                                 std::vector<DecisionTree> trees);

  bool operator==(const RandomForest&) const = default;

private:
  ForestConfig config_;
  std::size_t n_classes_ = 0;
  std::vector<double> class_weights_;
  std::vector<DecisionTree> trees_;
};

}  // namespace nids
