#include "nids/forest.hpp"

#include <cmath>
#include <random>

#include "nids/error.hpp"
#include "nids/parallel.hpp"

namespace nids {

void ForestConfig::check() const {
  if (n_estimators < 1) throw ConfigError("forest.n_estimators must be at least 1");
  if (min_samples_split < 2) throw ConfigError("forest.min_samples_split must be at least 2");
  if (min_samples_leaf < 1) throw ConfigError("forest.min_samples_leaf must be at least 1");
  if (!(min_impurity_decrease >= 0.0)) {
    throw ConfigError("forest.min_impurity_decrease must be non-negative");
  }
}

std::size_t ForestConfig::features_per_split() const noexcept {
  if (max_features == MaxFeatures::all) return feature_count;
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(feature_count))));
}

ForestConfig ForestConfig::from(const KeyValueConfig& config) {
  ForestConfig out;
  const auto count = [&](const std::string& key, std::size_t fallback) {
    const auto v = config.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError("'" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  };
  out.n_estimators = count("forest.n_estimators", out.n_estimators);
  out.min_samples_split = count("forest.min_samples_split", out.min_samples_split);
  out.min_samples_leaf = count("forest.min_samples_leaf", out.min_samples_leaf);
  out.min_impurity_decrease =
      config.get_double("forest.min_impurity_decrease", out.min_impurity_decrease);
  if (auto mf = config.get("forest.max_features")) {
    if (*mf == "sqrt") {
      out.max_features = MaxFeatures::sqrt;
    } else if (*mf == "all") {
      out.max_features = MaxFeatures::all;
    } else {
      throw ConfigError("forest.max_features must be 'sqrt' or 'all'");
    }
  }
  if (auto cw = config.get("forest.class_weight")) {
    if (*cw == "balanced") {
      out.class_weight = ClassWeighting::balanced;
    } else if (*cw == "uniform") {
      out.class_weight = ClassWeighting::uniform;
    } else {
      throw ConfigError("forest.class_weight must be 'balanced' or 'uniform'");
    }
  }
  out.seed = static_cast<std::uint64_t>(
      config.get_int("forest.seed", config.get_int("seed", 0)));
  out.check();
  return out;
}

RandomForest RandomForest::fit(const Dataset& train, std::size_t n_classes,
                               const ForestConfig& config, std::size_t threads) {
  config.check();
  if (train.empty()) throw ModelError("cannot fit a forest on an empty training set");
  if (train.rows.size() != train.targets.size()) {
    throw ModelError("rows and targets differ in length");
  }

  RandomForest forest;
  forest.config_ = config;
  forest.n_classes_ = n_classes;
  forest.class_weights_ = config.class_weight == ClassWeighting::balanced
                              ? balanced_class_weights(train.targets, n_classes)
                              : std::vector<double>(n_classes, 1.0);

  const TreeParams params{
      .min_samples_split = config.min_samples_split,
      .min_samples_leaf = config.min_samples_leaf,
      .max_features = config.features_per_split(),
      .min_impurity_decrease = config.min_impurity_decrease,
  };

  const std::size_t n = train.size();
  forest.trees_.resize(config.n_estimators);
  parallel_for(config.n_estimators, threads, [&](std::size_t t) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> bootstrap(n);
    for (auto& b : bootstrap) b = draw(rng);
    forest.trees_[t] = DecisionTree::fit(train.rows, train.targets, bootstrap,
                                         forest.class_weights_, params, rng);
  });
  return forest;
}

std::vector<std::size_t> RandomForest::votes(const FeatureVector& x) const {
  std::vector<std::size_t> tally(n_classes_, 0);
  for (const auto& tree : trees_) ++tally[static_cast<std::size_t>(tree.predict(x))];
  return tally;
}

int RandomForest::predict(const FeatureVector& x) const {
  const auto tally = votes(x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < tally.size(); ++c) {
    if (tally[c] > tally[best]) best = c;
  }
  return static_cast<int>(best);
}

RandomForest RandomForest::from_parts(ForestConfig config, std::size_t n_classes,
                                      std::vector<double> class_weights,
                                      std::vector<DecisionTree> trees) {
  if (trees.empty() || class_weights.size() != n_classes) {
    throw ModelError("malformed forest structure");
  }
  for (const auto& t : trees) {
    if (t.n_classes() != n_classes) throw ModelError("malformed forest structure: class count");
  }
  RandomForest forest;
  forest.config_ = config;
  forest.n_classes_ = n_classes;
  forest.class_weights_ = std::move(class_weights);
  forest.trees_ = std::move(trees);
  return forest;
}

}  // namespace nids
