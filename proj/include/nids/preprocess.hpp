#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nids/config.hpp"
#include "nids/flow.hpp"

namespace nids {

// A flow after the constant Flows column has been dropped: the ten model
// features in their native types, plus timestamp and labels.
struct FlowFeatures {
  Timestamp date_first_seen;
  std::string src_ip;
  std::int64_t src_port = 0;
  std::string dst_ip;
  std::int64_t dst_port = 0;
  std::string proto;
  std::string flags;
  std::int64_t tos = 0;
  double duration = 0.0;
  std::int64_t bytes = 0;
  std::int64_t packets = 0;
  ClassLabel class_label = ClassLabel::normal;
  AttackType attack_type = AttackType::none;
};

enum class SplitMode : std::uint8_t { chronological, shuffled };
enum class FitScope : std::uint8_t { whole_sample, train_only };

struct PipelineConfig {
  std::optional<std::pair<Timestamp, Timestamp>> sample_window;
  TargetScheme target_scheme = TargetScheme::attack_type;
  double split_ratio = 0.70;
  SplitMode split_mode = SplitMode::chronological;
  std::uint64_t split_seed = 0;
  FitScope fit_scope = FitScope::whole_sample;

  // Throws ConfigError when an invariant is violated.
  void check() const;

  static PipelineConfig from(const KeyValueConfig& config);
};

std::vector<FlowFeatures> drop_constant_features(std::span<const RawFlow> flows);

// First-appearance ordinal codes for src_ip, dst_ip, proto and flags.
EncoderState fit_encoder(std::span<const FlowFeatures> flows);

// Unscaled vector; unseen categorical tokens get one past the largest code.
FeatureVector encode(const FlowFeatures& flow, const EncoderState& encoder);

ScalerState fit_scaler(std::span<const FeatureVector> vectors);

// Min-max transform to [0, 1]. Constant features map to 0; values outside the
// fitted range are clamped.
FeatureVector scale(const FeatureVector& vector, const ScalerState& scaler);

// Rows with start <= date_first_seen <= end, order preserved.
std::vector<RawFlow> sample_window(std::span<const RawFlow> flows, Timestamp start, Timestamp end);

BinaryClass map_class_to_binary(ClassLabel label) noexcept;

int target_of(TargetScheme scheme, ClassLabel class_label, AttackType attack_type) noexcept;

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// floor(ratio * n) rows for training. Chronological mode takes the leading
// rows; shuffled mode draws membership from a seeded permutation. Both index
// lists come back ascending, so each split stays in source order.
SplitIndices split_indices(std::size_t n, const PipelineConfig& config);

Dataset make_dataset(std::span<const FlowFeatures> flows, std::span<const std::size_t> rows,
                     TargetScheme scheme, const EncoderState& encoder, const ScalerState& scaler);

// Fits encoder and scaler per config.fit_scope and builds both halves.
std::pair<Dataset, Dataset> holdout_split(std::span<const FlowFeatures> flows,
                                          const PipelineConfig& config);

// Full pipeline state shared by every target scheme of one experiment.
struct PreparedSample {
  std::vector<FlowFeatures> flows;
  SplitIndices split;
  EncoderState encoder;
  ScalerState scaler;

  Dataset train(TargetScheme scheme) const;
  Dataset test(TargetScheme scheme) const;
};

// Sort by timestamp (stable), window, drop constant columns, split, fit.
PreparedSample prepare(std::vector<RawFlow> flows, const PipelineConfig& config);

// Encode and scale with previously fitted state; no refitting.
Dataset apply_pipeline(std::span<const RawFlow> flows, TargetScheme scheme,
                       const EncoderState& encoder, const ScalerState& scaler);

}  // namespace nids
