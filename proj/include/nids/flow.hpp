#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nids {

// Timezone-naive wall-clock time, milliseconds since 1970-01-01 00:00:00.000
// of the printed calendar. No zone conversion is ever applied.
struct Timestamp {
  std::int64_t millis = 0;

  auto operator<=>(const Timestamp&) const = default;
};

enum class ClassLabel : std::uint8_t { normal, attacker, victim, suspicious, unknown };
enum class AttackType : std::uint8_t { none, ping_scan, port_scan, dos, brute_force };
enum class BinaryClass : std::uint8_t { normal, attack };

inline constexpr std::array<ClassLabel, 5> all_class_labels{
    ClassLabel::normal, ClassLabel::attacker, ClassLabel::victim, ClassLabel::suspicious,
    ClassLabel::unknown};
inline constexpr std::array<AttackType, 5> all_attack_types{
    AttackType::none, AttackType::ping_scan, AttackType::port_scan, AttackType::dos,
    AttackType::brute_force};

// CSV tokens as they appear in CIDDS-001 files.
std::string_view to_string(ClassLabel label) noexcept;
std::string_view to_string(AttackType type) noexcept;
std::string_view to_string(BinaryClass label) noexcept;

std::optional<ClassLabel> parse_class_label(std::string_view token) noexcept;
std::optional<AttackType> parse_attack_type(std::string_view token) noexcept;
std::optional<BinaryClass> parse_binary_class(std::string_view token) noexcept;

// Names used in report tables ("No Attack", "Ping Scan", ...).
std::string_view display_name(AttackType type) noexcept;

struct RawFlow {
  Timestamp date_first_seen;
  double duration = 0.0;
  std::string proto;
  std::string src_ip;
  std::int64_t src_port = 0;
  std::string dst_ip;
  std::int64_t dst_port = 0;
  std::int64_t packets = 0;
  std::int64_t bytes = 0;
  std::int64_t flows = 1;
  std::string flags;
  std::int64_t tos = 0;
  ClassLabel class_label = ClassLabel::normal;
  AttackType attack_type = AttackType::none;
  std::string attack_id;
  std::string attack_description;

  bool operator==(const RawFlow&) const = default;
};

// One entry per violated invariant; empty when the flow is well formed.
std::vector<std::string> validate(const RawFlow& flow);

inline constexpr std::size_t feature_count = 10;

// Fixed component order of every feature vector.
enum class Feature : std::size_t {
  src_ip,
  src_port,
  dst_ip,
  dst_port,
  proto,
  flags,
  tos,
  duration,
  bytes,
  packets,
};

inline constexpr std::array<std::string_view, feature_count> feature_names{
    "src_ip", "src_port", "dst_ip", "dst_port", "proto",
    "flags",  "tos",      "duration", "bytes",  "packets"};

using FeatureVector = std::array<double, feature_count>;

constexpr std::size_t index_of(Feature f) noexcept { return static_cast<std::size_t>(f); }

// Token -> code table for one categorical feature. Codes are dense and
// follow first appearance, so `tokens[code]` inverts the mapping.
struct CategoryMap {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::int32_t> codes;

  std::int32_t code_of(const std::string& token) const;
  std::int32_t add(const std::string& token);
  std::size_t size() const noexcept { return tokens.size(); }

  bool operator==(const CategoryMap& other) const { return tokens == other.tokens; }
};

inline constexpr std::array<Feature, 4> categorical_features{
    Feature::src_ip, Feature::dst_ip, Feature::proto, Feature::flags};

struct EncoderState {
  CategoryMap src_ip;
  CategoryMap dst_ip;
  CategoryMap proto;
  CategoryMap flags;

  bool operator==(const EncoderState&) const = default;
};

struct ScalerState {
  FeatureVector min{};
  FeatureVector max{};

  bool operator==(const ScalerState&) const = default;
};

enum class TargetScheme : std::uint8_t { class_label, class_binary, attack_type };

std::string_view to_string(TargetScheme scheme) noexcept;
std::optional<TargetScheme> parse_target_scheme(std::string_view token) noexcept;

// Ordered class list of a scheme; a target value is an index into it.
std::vector<std::string> class_names(TargetScheme scheme);
// Human-facing variant of class_names for report tables.
std::vector<std::string> class_display_names(TargetScheme scheme);

struct Dataset {
  std::vector<FeatureVector> rows;
  std::vector<int> targets;
  std::vector<Timestamp> timestamps;
  TargetScheme scheme = TargetScheme::attack_type;
  EncoderState encoder;
  ScalerState scaler;

  std::size_t size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
};

}  // namespace nids
