#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nids/flow.hpp"
#include "nids/forest.hpp"
#include "nids/knn.hpp"

namespace nids {

enum class ModelKind : std::uint8_t { forest, knn };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view token) noexcept;

// A fitted classifier together with everything needed to score raw flows:
// target scheme, class list, and the fitted encoder and scaler.
struct TrainedModel {
  ModelKind kind = ModelKind::forest;
  TargetScheme scheme = TargetScheme::attack_type;
  std::vector<std::string> classes;
  EncoderState encoder;
  ScalerState scaler;
  std::variant<RandomForest, KnnClassifier> engine;

  int predict(const FeatureVector& x) const;
  // Checked entry point for vectors of unknown length.
  int predict(std::span<const double> x) const;
  std::vector<int> predict_all(std::span<const FeatureVector> rows, std::size_t threads = 1) const;
};

struct TrainOptions {
  ForestConfig forest;
  KnnConfig knn;
  std::size_t threads = 1;
  std::size_t max_rows = SIZE_MAX;  // KNN capacity limit
};

TrainedModel train_model(const Dataset& train, ModelKind kind, const TrainOptions& options);

inline constexpr std::uint32_t model_format_version = 1;

// Layout: magic "NIDSMODL", u32 version, then kind, scheme, class list,
// encoder and scaler state, config snapshot and fitted structure, closed by a
// CRC-32 of every preceding byte. Integers and doubles are little-endian.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace nids
