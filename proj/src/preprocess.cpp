#include "nids/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nids/error.hpp"
#include "nids/ingest.hpp"

namespace nids {

void PipelineConfig::check() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ConfigError("split_ratio must lie in (0, 1)");
  }
  if (sample_window && !(sample_window->first < sample_window->second)) {
    throw ConfigError("sample window start must precede its end");
  }
}

PipelineConfig PipelineConfig::from(const KeyValueConfig& config) {
  PipelineConfig out;
  if (auto target = config.get("target")) {
    auto scheme = parse_target_scheme(*target);
    if (!scheme) throw ConfigError("unknown target scheme '" + *target + "'");
    out.target_scheme = *scheme;
  }
  out.split_ratio = config.get_double("split_ratio", out.split_ratio);
  if (auto mode = config.get("split_mode")) {
    if (*mode == "chronological") {
      out.split_mode = SplitMode::chronological;
    } else if (*mode == "shuffled") {
      out.split_mode = SplitMode::shuffled;
    } else {
      throw ConfigError("unknown split_mode '" + *mode + "'");
    }
  }
  out.split_seed = static_cast<std::uint64_t>(
      config.get_int("split_seed", config.get_int("seed", 0)));
  if (auto scope = config.get("fit_scope")) {
    if (*scope == "whole_sample") {
      out.fit_scope = FitScope::whole_sample;
    } else if (*scope == "train_only") {
      out.fit_scope = FitScope::train_only;
    } else {
      throw ConfigError("unknown fit_scope '" + *scope + "'");
    }
  }
  auto start = config.get("window_start");
  auto end = config.get("window_end");
  if (start.has_value() != end.has_value()) {
    throw ConfigError("window_start and window_end must be given together");
  }
  if (start) {
    try {
      out.sample_window = std::pair{parse_timestamp(*start), parse_timestamp(*end)};
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  out.check();
  return out;
}

std::vector<FlowFeatures> drop_constant_features(std::span<const RawFlow> flows) {
  std::vector<FlowFeatures> out;
  out.reserve(flows.size());
  for (const auto& f : flows) {
    out.push_back(FlowFeatures{
        .date_first_seen = f.date_first_seen,
        .src_ip = f.src_ip,
        .src_port = f.src_port,
        .dst_ip = f.dst_ip,
        .dst_port = f.dst_port,
        .proto = f.proto,
        .flags = f.flags,
        .tos = f.tos,
        .duration = f.duration,
        .bytes = f.bytes,
        .packets = f.packets,
        .class_label = f.class_label,
        .attack_type = f.attack_type,
    });
  }
  return out;
}

EncoderState fit_encoder(std::span<const FlowFeatures> flows) {
  if (flows.empty()) throw DataError("cannot fit encoder on an empty sample");
  EncoderState state;
  for (const auto& f : flows) {
    state.src_ip.add(f.src_ip);
    state.dst_ip.add(f.dst_ip);
    state.proto.add(f.proto);
    state.flags.add(f.flags);
  }
  return state;
}

FeatureVector encode(const FlowFeatures& flow, const EncoderState& encoder) {
  FeatureVector v{};
  v[index_of(Feature::src_ip)] = encoder.src_ip.code_of(flow.src_ip);
  v[index_of(Feature::src_port)] = static_cast<double>(flow.src_port);
  v[index_of(Feature::dst_ip)] = encoder.dst_ip.code_of(flow.dst_ip);
  v[index_of(Feature::dst_port)] = static_cast<double>(flow.dst_port);
  v[index_of(Feature::proto)] = encoder.proto.code_of(flow.proto);
  v[index_of(Feature::flags)] = encoder.flags.code_of(flow.flags);
  v[index_of(Feature::tos)] = static_cast<double>(flow.tos);
  v[index_of(Feature::duration)] = flow.duration;
  v[index_of(Feature::bytes)] = static_cast<double>(flow.bytes);
  v[index_of(Feature::packets)] = static_cast<double>(flow.packets);
  return v;
}

ScalerState fit_scaler(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw DataError("cannot fit scaler on an empty sample");
  ScalerState state;
  state.min = vectors.front();
  state.max = vectors.front();
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < feature_count; ++i) {
      state.min[i] = std::min(state.min[i], v[i]);
      state.max[i] = std::max(state.max[i], v[i]);
    }
  }
  return state;
}

FeatureVector scale(const FeatureVector& vector, const ScalerState& scaler) {
  FeatureVector out{};
  for (std::size_t i = 0; i < feature_count; ++i) {
    const double range = scaler.max[i] - scaler.min[i];
    if (!(range > 0.0)) {
      out[i] = 0.0;
      continue;
    }
    out[i] = std::clamp((vector[i] - scaler.min[i]) / range, 0.0, 1.0);
  }
  return out;
}

std::vector<RawFlow> sample_window(std::span<const RawFlow> flows, Timestamp start, Timestamp end) {
  if (end < start) throw ConfigError("sample window start is after its end");
  std::vector<RawFlow> out;
  for (const auto& f : flows) {
    if (start <= f.date_first_seen && f.date_first_seen <= end) out.push_back(f);
  }
  return out;
}

BinaryClass map_class_to_binary(ClassLabel label) noexcept {
  return label == ClassLabel::normal ? BinaryClass::normal : BinaryClass::attack;
}

int target_of(TargetScheme scheme, ClassLabel class_label, AttackType attack_type) noexcept {
  switch (scheme) {
    case TargetScheme::class_label: return static_cast<int>(class_label);
    case TargetScheme::class_binary: return static_cast<int>(map_class_to_binary(class_label));
    case TargetScheme::attack_type: return static_cast<int>(attack_type);
  }
  return 0;
}

SplitIndices split_indices(std::size_t n, const PipelineConfig& config) {
  config.check();
  if (n < 2) throw DataError("holdout split needs at least 2 rows, got " + std::to_string(n));
  // The small epsilon keeps exact products like 0.7 * 10 from flooring to 6.
  const auto n_train =
      static_cast<std::size_t>(std::floor(config.split_ratio * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_train == n) {
    throw DataError("split ratio leaves an empty partition for " + std::to_string(n) + " rows");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.split_mode == SplitMode::shuffled) {
    std::mt19937_64 rng(config.split_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset make_dataset(std::span<const FlowFeatures> flows, std::span<const std::size_t> rows,
                     TargetScheme scheme, const EncoderState& encoder, const ScalerState& scaler) {
  Dataset ds;
  ds.scheme = scheme;
  ds.encoder = encoder;
  ds.scaler = scaler;
  ds.rows.reserve(rows.size());
  ds.targets.reserve(rows.size());
  ds.timestamps.reserve(rows.size());
  for (auto r : rows) {
    const auto& f = flows[r];
    ds.rows.push_back(scale(encode(f, encoder), scaler));
    ds.targets.push_back(target_of(scheme, f.class_label, f.attack_type));
    ds.timestamps.push_back(f.date_first_seen);
  }
  return ds;
}

namespace {

std::pair<EncoderState, ScalerState> fit_state(std::span<const FlowFeatures> flows,
                                               const SplitIndices& split, FitScope scope) {
  std::vector<FlowFeatures> fit_rows;
  std::span<const FlowFeatures> basis = flows;
  if (scope == FitScope::train_only) {
    fit_rows.reserve(split.train.size());
    for (auto r : split.train) fit_rows.push_back(flows[r]);
    basis = fit_rows;
  }
  auto encoder = fit_encoder(basis);
  std::vector<FeatureVector> encoded;
  encoded.reserve(basis.size());
  for (const auto& f : basis) encoded.push_back(encode(f, encoder));
  auto scaler = fit_scaler(encoded);
  return {std::move(encoder), scaler};
}

}  // namespace

std::pair<Dataset, Dataset> holdout_split(std::span<const FlowFeatures> flows,
                                          const PipelineConfig& config) {
  const auto split = split_indices(flows.size(), config);
  const auto [encoder, scaler] = fit_state(flows, split, config.fit_scope);
  return {make_dataset(flows, split.train, config.target_scheme, encoder, scaler),
          make_dataset(flows, split.test, config.target_scheme, encoder, scaler)};
}

Dataset PreparedSample::train(TargetScheme scheme) const {
  return make_dataset(flows, split.train, scheme, encoder, scaler);
}

Dataset PreparedSample::test(TargetScheme scheme) const {
  return make_dataset(flows, split.test, scheme, encoder, scaler);
}

namespace {

void sort_by_time(std::vector<RawFlow>& flows) {
  std::stable_sort(flows.begin(), flows.end(), [](const RawFlow& a, const RawFlow& b) {
    return a.date_first_seen < b.date_first_seen;
  });
}

}  // namespace

PreparedSample prepare(std::vector<RawFlow> flows, const PipelineConfig& config) {
  config.check();
  sort_by_time(flows);
  if (config.sample_window) {
    flows = sample_window(flows, config.sample_window->first, config.sample_window->second);
  }
  PreparedSample sample;
  sample.flows = drop_constant_features(flows);
  sample.split = split_indices(sample.flows.size(), config);
  std::tie(sample.encoder, sample.scaler) = fit_state(sample.flows, sample.split, config.fit_scope);
  return sample;
}

Dataset apply_pipeline(std::span<const RawFlow> flows, TargetScheme scheme,
                       const EncoderState& encoder, const ScalerState& scaler) {
  std::vector<RawFlow> sorted(flows.begin(), flows.end());
  sort_by_time(sorted);
  const auto features = drop_constant_features(sorted);
  std::vector<std::size_t> all(features.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_dataset(features, all, scheme, encoder, scaler);
}

}  // namespace nids
