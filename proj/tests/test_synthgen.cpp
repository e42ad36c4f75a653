#include <doctest.h>

#include <set>
#include <sstream>

#include "nids/config.hpp"
#include "nids/error.hpp"
#include "nids/ingest.hpp"
#include "nids/synthgen.hpp"
#include "support.hpp"

using namespace nids;

namespace {

ScenarioConfig scenario(const std::string& text) { return ScenarioConfig::from(KeyValueConfig::parse(text)); }

const std::string small_header =
    "seed = 5\n"
    "start = 2017-03-15 00:00:00.000\n"
    "duration = 6h\n"
    "total_flows = 20000\n";

const std::string small_scenario = small_header +
                                   "[schedule]\n"
                                   "ping_scan 30m 10m attacker1 192.168.220.0/24 100\n"
                                   "port_scan 1h 20m attacker1 192.168.100.5 400\n"
                                   "dos 2h 10m attacker2 192.168.100.5 600\n"
                                   "brute_force 3h 30m attacker3 192.168.100.4 200\n"
                                   "brute_force 4h 30m attacker1 EXT_SERVER 100\n";

bool is_attack_role(ClassLabel c) { return c == ClassLabel::attacker || c == ClassLabel::victim; }

std::string config_error(const std::string& text) {
  try {
    scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  auto cfg = scenario(small_header + "[schedule]\nport_scan 1h 30m attacker1 192.168.100.5 300\n");
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(a.flows == b.flows);
  cfg.seed = 6;
  CHECK_FALSE(generate(cfg).flows == a.flows);
}

TEST_CASE("generated flows are valid, sorted and re-ingest cleanly") {
  const auto s = generate(scenario(small_scenario));
  REQUIRE(s.flows.size() == 20000);
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    CHECK(validate(s.flows[i]).empty());
    if (i > 0) CHECK(s.flows[i - 1].date_first_seen <= s.flows[i].date_first_seen);
  }
  std::stringstream csv;
  write_flows(csv, s.flows);
  FlowReader reader(csv, IngestOptions{.strict = true});
  std::vector<RawFlow> back;
  while (auto f = reader.next()) back.push_back(*f);
  CHECK(reader.report().rows_rejected == 0);
  REQUIRE(back.size() == s.flows.size());
  for (std::size_t i = 0; i < back.size(); i += 97) {
    CHECK(back[i].date_first_seen == s.flows[i].date_first_seen);
    CHECK(back[i].src_ip == s.flows[i].src_ip);
    CHECK(back[i].dst_port == s.flows[i].dst_port);
    CHECK(back[i].bytes == s.flows[i].bytes);
    CHECK(back[i].class_label == s.flows[i].class_label);
    CHECK(back[i].attack_type == s.flows[i].attack_type);
  }
}

TEST_CASE("ground truth matches the flows row for row") {
  const auto s = generate(scenario(small_scenario));
  REQUIRE(s.truth.size() == s.flows.size());
  std::ostringstream out;
  write_ground_truth(out, s.truth);
  CHECK(out.str().rfind("flow_index,attack_id,class,attack_type\n", 0) == 0);
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    const auto& f = s.flows[i];
    const auto& t = s.truth[i];
    CHECK(t.flow_index == i);
    CHECK(t.class_label == f.class_label);
    CHECK(t.attack_type == f.attack_type);
    CHECK(t.attack_id == f.attack_id);
  }
}

TEST_CASE("labels are mutually consistent") {
  const auto s = generate(scenario(small_scenario));
  std::set<AttackType> seen;
  for (const auto& f : s.flows) {
    seen.insert(f.attack_type);
    CHECK((f.attack_type != AttackType::none) == is_attack_role(f.class_label));
    CHECK((f.attack_id == "---") == (f.attack_type == AttackType::none));
    CHECK((f.attack_description == "---") == (f.attack_type == AttackType::none));
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("an empty schedule without external traffic is entirely benign") {
  const auto s = generate(scenario(small_header + "external_share = 0\n[schedule]\n"));
  REQUIRE(s.flows.size() == 20000);
  for (const auto& f : s.flows) {
    CHECK(f.class_label == ClassLabel::normal);
    CHECK(f.attack_type == AttackType::none);
  }
}

TEST_CASE("external traffic takes the external labels") {
  const auto s = generate(scenario(small_header + "external_share = 0.3\n[schedule]\n"));
  std::set<ClassLabel> labels;
  std::size_t external = 0;
  for (const auto& f : s.flows) {
    if (f.src_ip != "EXT_SERVER" && f.dst_ip != "EXT_SERVER") continue;
    ++external;
    labels.insert(f.class_label);
  }
  CHECK(external > 4000);
  CHECK(labels == std::set<ClassLabel>{ClassLabel::normal, ClassLabel::suspicious, ClassLabel::unknown});
}

TEST_CASE("attack_fraction fixes the share of attack flows") {
  for (double fraction : {0.05, 0.12, 0.3}) {
    auto cfg = ScenarioConfig::defaults();
    cfg.total_flows = 30000;
    cfg.attack_fraction = fraction;
    const auto s = generate(cfg);
    std::size_t attacks = 0;
    for (const auto& f : s.flows) attacks += f.attack_type != AttackType::none;
    const double share = static_cast<double>(attacks) / static_cast<double>(s.flows.size());
    CHECK(std::abs(share - fraction) <= 0.01);
  }
}

TEST_CASE("port scan intensity is the number of distinct probed ports") {
  const auto s = generate(scenario(small_header +
                                   "attack_fraction = none\n"
                                   "[schedule]\nport_scan 2h 10m attacker1 192.168.100.5 100\n"));
  std::set<std::int64_t> ports;
  std::set<std::string> targets;
  for (const auto& f : s.flows) {
    if (f.src_ip != "ATTACKER1") continue;
    ports.insert(f.dst_port);
    targets.insert(f.dst_ip);
    CHECK(f.attack_type == AttackType::port_scan);
    CHECK(f.class_label == ClassLabel::attacker);
  }
  CHECK(ports.size() == 100);
  CHECK(targets == std::set<std::string>{"192.168.100.5"});
}

TEST_CASE("ping scans are ICMP echo requests across the swept prefix") {
  const auto s = generate(scenario(small_header +
                                   "attack_fraction = none\n"
                                   "[schedule]\nping_scan 1h 5m attacker2 192.168.220.0/24 254\n"));
  std::set<std::string> swept;
  std::size_t probes = 0;
  for (const auto& f : s.flows) {
    if (f.attack_type != AttackType::ping_scan) continue;
    CHECK(f.proto == "ICMP");
    if (f.src_ip == "ATTACKER2") {
      ++probes;
      swept.insert(f.dst_ip);
      CHECK(f.dst_port == 2048);
    } else {
      CHECK(f.dst_ip == "ATTACKER2");
      CHECK(f.class_label == ClassLabel::victim);
    }
  }
  CHECK(probes == 254);
  CHECK(swept.size() == 254);
}

TEST_CASE("a DoS window multiplies the flow rate towards the victim") {
  const auto s = generate(scenario(small_header +
                                   "attack_fraction = none\n"
                                   "[schedule]\ndos 3h 10m attacker2 192.168.100.5 2000\n"));
  const auto start = parse_timestamp("2017-03-15 00:00:00.000").millis;
  const std::int64_t lo = start + 3 * 3'600'000, hi = lo + 600'000;
  std::size_t in_window = 0, outside = 0;
  for (const auto& f : s.flows) {
    if (f.dst_ip != "192.168.100.5") continue;
    const auto t = f.date_first_seen.millis;
    (t >= lo && t <= hi ? in_window : outside)++;
  }
  const double rate_in = static_cast<double>(in_window) / 10.0;
  const double rate_out = static_cast<double>(outside) / 350.0;
  CHECK(in_window >= 2000);
  CHECK(rate_in > 20.0 * rate_out);
}

TEST_CASE("external labeller rules") {
  auto cfg = ScenarioConfig::defaults();
  const auto& hosts = cfg.hosts;
  auto f = testing::tcp_flow(0, "OPENSTACK_NET", "EXT_SERVER", 22);
  CHECK(label_external(f, hosts) == ClassLabel::normal);
  f = testing::tcp_flow(0, "ATTACKER1", "EXT_SERVER", 22);
  CHECK(label_external(f, hosts) == ClassLabel::attacker);
  f = testing::tcp_flow(0, "EXT_SERVER", "ATTACKER3", 51000);
  CHECK(label_external(f, hosts) == ClassLabel::victim);
  f = testing::tcp_flow(0, "12_34", "EXT_SERVER", 443);
  CHECK(label_external(f, hosts) == ClassLabel::unknown);
  f = testing::tcp_flow(0, "12_34", "EXT_SERVER", 3389);
  CHECK(label_external(f, hosts) == ClassLabel::suspicious);
}

TEST_CASE("internal labeller follows the schedule window and roles") {
  const auto cfg = scenario(small_header + "[schedule]\ndos 1h 10m attacker2 192.168.100.5 50\n");
  const auto t0 = cfg.start.millis + 3'600'000;
  auto f = testing::tcp_flow(t0 + 1000, "ATTACKER2", "192.168.100.5", 80);
  CHECK(label_openstack(f, cfg.schedule, cfg.hosts, cfg.start) ==
        std::pair{ClassLabel::attacker, AttackType::dos});
  f = testing::tcp_flow(t0 + 2000, "192.168.100.5", "ATTACKER2", 51000);
  CHECK(label_openstack(f, cfg.schedule, cfg.hosts, cfg.start) ==
        std::pair{ClassLabel::victim, AttackType::dos});
  f = testing::tcp_flow(t0 - 1, "ATTACKER2", "192.168.100.5", 80);
  CHECK(label_openstack(f, cfg.schedule, cfg.hosts, cfg.start).first == ClassLabel::normal);
  f = testing::tcp_flow(t0 + 1000, "ATTACKER2", "192.168.100.4", 80);
  CHECK(label_openstack(f, cfg.schedule, cfg.hosts, cfg.start).first == ClassLabel::normal);
  f = testing::tcp_flow(t0 + 1000, "192.168.220.5", "192.168.100.5", 80);
  CHECK(label_openstack(f, cfg.schedule, cfg.hosts, cfg.start).second == AttackType::none);
}

TEST_CASE("bad schedules are rejected with the entry named") {
  const auto err = config_error(small_header + "[schedule]\n"
                                               "dos 1h 10m attacker2 192.168.100.5 50\n"
                                               "port_scan 5h 2h attacker1 192.168.100.5 50\n");
  CHECK(err.find("schedule entry 2") != std::string::npos);
  CHECK(err.find("after the scenario") != std::string::npos);
  CHECK(config_error(small_header + "[schedule]\ndos 1h 10m nobody 192.168.100.5 5\n").find("unknown attacker") !=
        std::string::npos);
  CHECK(config_error(small_header + "[schedule]\ndos 1h 10m attacker1 192.168.100.0/24 5\n").find("prefix") !=
        std::string::npos);
  CHECK(config_error(small_header + "[schedule]\nping_scan 1h 10m attacker1 192.168.0.0/16 5\n")
            .find("/24") != std::string::npos);
  CHECK(config_error(small_header + "[schedule]\nnone 1h 10m attacker1 192.168.100.5 5\n").find("none") !=
        std::string::npos);
  CHECK(config_error(small_header + "[schedule]\ndos 1h 10m attacker1 192.168.100.5 0\n").find("intensity") !=
        std::string::npos);
  CHECK(config_error(small_header + "[schedule]\ndos 1h 50ms attacker1 192.168.100.5 5\n").find("duration") !=
        std::string::npos);
  CHECK(config_error(small_header + "[schedule]\ndos 1h attacker1 192.168.100.5 5\n").find("schedule entry 1") !=
        std::string::npos);
  CHECK(config_error(small_header + "colour = red\n").find("colour") != std::string::npos);
}

TEST_CASE("a schedule larger than total_flows is a config error") {
  auto cfg = scenario(small_header + "attack_fraction = none\n[schedule]\ndos 1h 10m attacker1 192.168.100.5 30000\n");
  CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("time spans") {
  CHECK(parse_span_ms("250ms") == 250);
  CHECK(parse_span_ms("30s") == 30'000);
  CHECK(parse_span_ms("30") == 30'000);
  CHECK(parse_span_ms("2h") == 7'200'000);
  CHECK(parse_span_ms("1h30m") == 5'400'000);
  CHECK(parse_span_ms("1d") == 86'400'000);
  CHECK(parse_span_ms("1.5m") == 90'000);
  CHECK_THROWS_AS(parse_span_ms(""), ConfigError);
  CHECK_THROWS_AS(parse_span_ms("3w"), ConfigError);
  CHECK_THROWS_AS(parse_span_ms("h"), ConfigError);
}

TEST_CASE("victim specs") {
  const auto net = VictimSpec::parse("192.168.220.0/24");
  CHECK(net.matches("192.168.220.17"));
  CHECK_FALSE(net.matches("192.168.221.17"));
  CHECK(net.render() == "192.168.220.0/24");
  const auto host = VictimSpec::parse("192.168.100.5");
  CHECK(host.matches("192.168.100.5"));
  CHECK_FALSE(host.matches("192.168.100.50"));
  CHECK(VictimSpec::parse("EXT_SERVER").matches("EXT_SERVER"));
  CHECK_THROWS_AS(VictimSpec::parse("10.0.0.0/12"), ConfigError);
}

TEST_CASE("attack signatures") {
  std::mt19937_64 rng(51);
  const auto pings = attack_signature(AttackType::ping_scan, 10, rng);
  REQUIRE(pings.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(pings[i].proto == "ICMP");
    CHECK(pings[i].target == i);
  }
  const auto scan = attack_signature(AttackType::port_scan, 500, rng);
  std::set<std::int64_t> ports, sports;
  for (const auto& t : scan) {
    ports.insert(t.dst_port);
    sports.insert(t.src_port);
    CHECK(t.flags == "....S.");
  }
  CHECK(ports.size() == 500);
  CHECK(sports.size() == 1);
  for (const auto& t : attack_signature(AttackType::brute_force, 50, rng)) CHECK(t.dst_port == 22);
  for (const auto& t : attack_signature(AttackType::dos, 50, rng)) CHECK(t.dst_port == 80);
  CHECK_THROWS_AS(attack_signature(AttackType::none, 5, rng), ConfigError);
}

TEST_CASE("scenario configs round-trip through their rendered form") {
  const auto original = ScenarioConfig::defaults();
  const auto again = ScenarioConfig::from(KeyValueConfig::parse(original.to_config().render()));
  CHECK(again.to_config().render() == original.to_config().render());
  CHECK(again.schedule.size() == original.schedule.size());
  CHECK(again.hosts.clients == original.hosts.clients);
  CHECK(again.duration_ms == original.duration_ms);
  auto small = scenario(small_header + "[schedule]\ndos 1h 10m attacker2 192.168.100.5 80\n");
  const auto rendered = ScenarioConfig::from(KeyValueConfig::parse(small.to_config().render()));
  CHECK(generate(rendered).flows == generate(small).flows);
}
