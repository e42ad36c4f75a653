#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nids/config.hpp"
#include "nids/flow.hpp"

namespace nids {

struct NamedHost {
  std::string name;     // as referenced from the schedule, e.g. "attacker1"
  std::string address;  // as written into flows, e.g. "ATTACKER1"
};

struct HostInventory {
  std::vector<std::string> clients;
  std::vector<std::string> servers;
  std::string external_server = "EXT_SERVER";
  // How the emulated network appears in external-server traffic.
  std::string openstack_net = "OPENSTACK_NET";
  std::vector<NamedHost> attackers;
  std::size_t internet_hosts = 400;

  std::optional<std::string> attacker_address(const std::string& name) const;
};

// Victim of an attack: a single address or an IPv4 /8, /16 or /24 prefix.
struct VictimSpec {
  std::string address;
  int prefix_octets = 4;  // 4 = exact address

  static VictimSpec parse(const std::string& token);
  bool matches(const std::string& address) const;
  std::string render() const;
};

struct ScheduleEntry {
  AttackType type = AttackType::none;
  std::int64_t start_ms = 0;  // offset from scenario start
  std::int64_t duration_ms = 0;
  std::string attacker;  // inventory name
  VictimSpec victim;
  std::size_t intensity = 0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  Timestamp start;
  std::int64_t duration_ms = 0;
  std::size_t total_flows = 0;
  // When set, attack flows are exactly round(fraction * total_flows), split
  // across schedule entries in proportion to their intensity.
  std::optional<double> attack_fraction;
  double external_share = 0.06;  // share of benign flows touching the external server
  int work_start_hour = 8;
  int work_end_hour = 18;
  double off_hours_weight = 0.15;
  double weekend_weight = 0.08;
  HostInventory hosts;
  std::vector<ScheduleEntry> schedule;

  // Throws ConfigError naming the offending schedule entry or key.
  void check() const;

  static ScenarioConfig defaults();
  static ScenarioConfig from(const KeyValueConfig& config);
  KeyValueConfig to_config() const;
};

struct GroundTruthRow {
  std::size_t flow_index = 0;
  std::string attack_id;  // "---" for background traffic
  ClassLabel class_label = ClassLabel::normal;
  AttackType attack_type = AttackType::none;
};

struct Scenario {
  std::vector<RawFlow> flows;  // sorted by date_first_seen
  std::vector<GroundTruthRow> truth;
};

// Same seed, same scenario; flows are labelled by the rule-based labellers
// below, ground truth records what the generator intended.
Scenario generate(const ScenarioConfig& config);

// Labels traffic inside the emulated network from the attack schedule.
std::pair<ClassLabel, AttackType> label_openstack(const RawFlow& flow,
                                                  std::span<const ScheduleEntry> schedule,
                                                  const HostInventory& hosts, Timestamp start);

// Labels traffic touching the external server: internal origins are normal,
// the attacker hosts attacker/victim, ports 80 and 443 unknown, the rest
// suspicious.
ClassLabel label_external(const RawFlow& flow, const HostInventory& hosts);

// Offsets and field values for one attacker-side flow; `target` indexes the
// attacked host within the victim set (always 0 for single-host attacks).
struct FlowTemplate {
  std::string proto;
  std::size_t target = 0;
  std::int64_t src_port = 0;
  std::int64_t dst_port = 0;
  std::int64_t packets = 0;
  std::int64_t bytes = 0;
  double duration = 0.0;
  std::string flags;
};

std::vector<FlowTemplate> attack_signature(AttackType type, std::size_t intensity,
                                           std::mt19937_64& rng);

void write_ground_truth(std::ostream& out, std::span<const GroundTruthRow> truth);

// Parses spans such as "250ms", "30s", "2h" or "1h30m" into milliseconds; bare numbers
// are seconds.
std::int64_t parse_span_ms(const std::string& token);

}  // namespace nids
