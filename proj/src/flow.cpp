#include "nids/flow.hpp"

namespace nids {

std::string_view to_string(ClassLabel label) noexcept {
  switch (label) {
    case ClassLabel::normal: return "normal";
    case ClassLabel::attacker: return "attacker";
    case ClassLabel::victim: return "victim";
    case ClassLabel::suspicious: return "suspicious";
    case ClassLabel::unknown: return "unknown";
  }
  return "normal";
}

std::string_view to_string(AttackType type) noexcept {
  switch (type) {
    case AttackType::none: return "---";
    case AttackType::ping_scan: return "pingScan";
    case AttackType::port_scan: return "portScan";
    case AttackType::dos: return "dos";
    case AttackType::brute_force: return "bruteForce";
  }
  return "---";
}

std::string_view to_string(BinaryClass label) noexcept {
  return label == BinaryClass::normal ? "normal" : "attack";
}

std::optional<ClassLabel> parse_class_label(std::string_view token) noexcept {
  for (auto label : all_class_labels) {
    if (token == to_string(label)) return label;
  }
  return std::nullopt;
}

std::optional<AttackType> parse_attack_type(std::string_view token) noexcept {
  for (auto type : all_attack_types) {
    if (token == to_string(type)) return type;
  }
  // snake_case aliases used in config files
  if (token == "none") return AttackType::none;
  if (token == "ping_scan") return AttackType::ping_scan;
  if (token == "port_scan") return AttackType::port_scan;
  if (token == "brute_force") return AttackType::brute_force;
  return std::nullopt;
}

std::optional<BinaryClass> parse_binary_class(std::string_view token) noexcept {
  if (token == "normal") return BinaryClass::normal;
  if (token == "attack") return BinaryClass::attack;
  return std::nullopt;
}

std::string_view display_name(AttackType type) noexcept {
  switch (type) {
    case AttackType::none: return "No Attack";
    case AttackType::ping_scan: return "Ping Scan";
    case AttackType::port_scan: return "Port Scan";
    case AttackType::dos: return "DoS";
    case AttackType::brute_force: return "Brute Force";
  }
  return "No Attack";
}

std::vector<std::string> validate(const RawFlow& flow) {
  std::vector<std::string> violations;
  if (flow.duration < 0.0) violations.emplace_back("negative duration");
  if (flow.packets < 0) violations.emplace_back("negative packets");
  if (flow.bytes < 0) violations.emplace_back("negative bytes");
  if (flow.src_port < 0 || flow.src_port > 65535 || flow.dst_port < 0 || flow.dst_port > 65535) {
    violations.emplace_back("port out of range");
  }
  if (flow.attack_type != AttackType::none && flow.class_label == ClassLabel::normal) {
    violations.emplace_back("label inconsistency");
  }
  return violations;
}

std::int32_t CategoryMap::code_of(const std::string& token) const {
  auto it = codes.find(token);
  if (it == codes.end()) return static_cast<std::int32_t>(tokens.size());
  return it->second;
}

std::int32_t CategoryMap::add(const std::string& token) {
  auto [it, inserted] = codes.emplace(token, static_cast<std::int32_t>(tokens.size()));
  if (inserted) tokens.push_back(token);
  return it->second;
}

std::string_view to_string(TargetScheme scheme) noexcept {
  switch (scheme) {
    case TargetScheme::class_label: return "class";
    case TargetScheme::class_binary: return "class_binary";
    case TargetScheme::attack_type: return "attack_type";
  }
  return "attack_type";
}

std::optional<TargetScheme> parse_target_scheme(std::string_view token) noexcept {
  if (token == "class") return TargetScheme::class_label;
  if (token == "class_binary") return TargetScheme::class_binary;
  if (token == "attack_type") return TargetScheme::attack_type;
  return std::nullopt;
}

std::vector<std::string> class_names(TargetScheme scheme) {
  std::vector<std::string> names;
  switch (scheme) {
    case TargetScheme::class_label:
      for (auto label : all_class_labels) names.emplace_back(to_string(label));
      break;
    case TargetScheme::class_binary:
      names = {"normal", "attack"};
      break;
    case TargetScheme::attack_type:
      for (auto type : all_attack_types) names.emplace_back(to_string(type));
      break;
  }
  return names;
}

std::vector<std::string> class_display_names(TargetScheme scheme) {
  if (scheme != TargetScheme::attack_type) return class_names(scheme);
  std::vector<std::string> names;
  for (auto type : all_attack_types) names.emplace_back(display_name(type));
  return names;
}

}  // namespace nids
