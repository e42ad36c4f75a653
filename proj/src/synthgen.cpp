#include "nids/synthgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "nids/error.hpp"
#include "nids/ingest.hpp"
#include "nids/text.hpp"

namespace nids {

namespace {

constexpr std::int64_t ms_per_hour = 3'600'000;
constexpr std::int64_t ms_per_day = 24 * ms_per_hour;
// Replies trail their probe by at most this much; attack probes are placed
// so that replies still fall inside the attack window.
constexpr std::int64_t max_reply_latency_ms = 50;

constexpr std::int64_t icmp_echo_request = 8 * 256;
constexpr std::int64_t icmp_echo_reply = 0;

// Services that answer a SYN with SYN-ACK during port scans.
constexpr std::array<std::int64_t, 8> open_ports{22, 25, 53, 80, 443, 445, 993, 8080};

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return uniform_real(rng, 0.0, 1.0) < p; }

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(items.size()) - 1))];
}

// Seconds rounded to the millisecond, as NetFlow exporters print them.
double millis(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

double exponential(std::mt19937_64& rng, double mean) {
  return std::exponential_distribution<double>(1.0 / mean)(rng);
}

std::int64_t ephemeral_port(std::mt19937_64& rng) { return uniform_int(rng, 32768, 60999); }

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  return std::mt19937_64(seq);
}

bool is_attack_role(ClassLabel label) noexcept {
  return label == ClassLabel::attacker || label == ClassLabel::victim;
}

std::vector<std::string> parse_host_list(const std::string& value) {
  std::vector<std::string> hosts;
  for (auto part : text::split(value, ',')) {
    const auto item = std::string(text::trim(part));
    if (item.empty()) continue;
    const auto dash = item.find('-');
    const auto dot = item.rfind('.');
    if (dash == std::string::npos || dot == std::string::npos || dash < dot) {
      hosts.push_back(item);
      continue;
    }
    auto lo = text::to_int(std::string_view(item).substr(dot + 1, dash - dot - 1));
    auto hi = text::to_int(std::string_view(item).substr(dash + 1));
    if (!lo || !hi || *lo > *hi || *lo < 0 || *hi > 255) {
      throw ConfigError("bad host range '" + item + "'");
    }
    const auto prefix = item.substr(0, dot + 1);
    for (auto i = *lo; i <= *hi; ++i) hosts.push_back(prefix + std::to_string(i));
  }
  return hosts;
}

std::string render_host_list(const std::vector<std::string>& hosts) {
  std::string out;
  for (const auto& h : hosts) {
    if (!out.empty()) out += ", ";
    out += h;
  }
  return out;
}

std::string render_span(std::int64_t ms) {
  if (ms % ms_per_hour == 0) return std::to_string(ms / ms_per_hour) + "h";
  if (ms % 60'000 == 0) return std::to_string(ms / 60'000) + "m";
  if (ms % 1000 == 0) return std::to_string(ms / 1000) + "s";
  return std::to_string(ms) + "ms";
}

std::string_view config_token(AttackType type) {
  switch (type) {
    case AttackType::ping_scan: return "ping_scan";
    case AttackType::port_scan: return "port_scan";
    case AttackType::dos: return "dos";
    case AttackType::brute_force: return "brute_force";
    case AttackType::none: break;
  }
  return "none";
}

std::string describe(std::size_t index, const ScheduleEntry& e) {
  return fmt::format("schedule entry {} ({} at {})", index + 1, config_token(e.type),
                     render_span(e.start_ms));
}

// Which schedule entry, if any, a flow belongs to and in which role.
std::optional<std::pair<std::size_t, ClassLabel>> match_schedule(
    const RawFlow& flow, std::span<const ScheduleEntry> schedule, const HostInventory& hosts,
    Timestamp start) {
  const auto offset = flow.date_first_seen.millis - start.millis;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& e = schedule[i];
    if (offset < e.start_ms || offset > e.start_ms + e.duration_ms) continue;
    const auto attacker = hosts.attacker_address(e.attacker);
    if (!attacker) continue;
    if (flow.src_ip == *attacker && e.victim.matches(flow.dst_ip)) {
      return std::pair{i, ClassLabel::attacker};
    }
    if (flow.dst_ip == *attacker && e.victim.matches(flow.src_ip)) {
      return std::pair{i, ClassLabel::victim};
    }
  }
  return std::nullopt;
}

struct Pending {
  RawFlow flow;
  GroundTruthRow truth;
};

RawFlow make_flow(std::int64_t at_ms, std::string proto, std::string src, std::int64_t sport,
                  std::string dst, std::int64_t dport, std::int64_t packets, std::int64_t bytes,
                  double duration, std::string flags, std::int64_t tos = 0) {
  RawFlow f;
  f.date_first_seen = Timestamp{at_ms};
  f.duration = millis(std::max(0.0, duration));
  f.proto = std::move(proto);
  f.src_ip = std::move(src);
  f.src_port = sport;
  f.dst_ip = std::move(dst);
  f.dst_port = dport;
  f.packets = std::max<std::int64_t>(1, packets);
  f.bytes = std::max<std::int64_t>(f.packets * 28, bytes);
  f.flows = 1;
  f.flags = std::move(flags);
  f.tos = tos;
  return f;
}

// Large transfers land on 100 kB multiples so they print with the M suffix.
std::int64_t transfer_bytes(std::int64_t bytes) {
  if (bytes < 1'000'000) return bytes;
  return bytes / 100'000 * 100'000;
}

// Piecewise-constant benign rate: working hours on weekdays at full weight,
// evenings and nights reduced, weekends reduced further.
class DiurnalProfile {
public:
  explicit DiurnalProfile(const ScenarioConfig& c) {
    using namespace std::chrono;
    const std::int64_t begin = c.start.millis;
    const std::int64_t end = begin + c.duration_ms;
    std::int64_t at = begin;
    double cumulative = 0.0;
    while (at < end) {
      const std::int64_t next = std::min(end, (at / ms_per_hour + 1) * ms_per_hour);
      const auto day = at / ms_per_day;
      const int hour = static_cast<int>((at % ms_per_day) / ms_per_hour);
      const unsigned wd = weekday{sys_days{days{day}}}.c_encoding();
      double weight = c.off_hours_weight;
      if (wd == 0 || wd == 6) {
        weight = c.weekend_weight;
      } else if (hour >= c.work_start_hour && hour < c.work_end_hour) {
        weight = 1.0;
      }
      cumulative += weight * static_cast<double>(next - at);
      buckets_.push_back({at, next, cumulative});
      at = next;
    }
  }

  std::int64_t sample(std::mt19937_64& rng) const {
    const double u = uniform_real(rng, 0.0, buckets_.back().cumulative);
    auto it = std::upper_bound(buckets_.begin(), buckets_.end(), u,
                               [](double v, const Bucket& b) { return v < b.cumulative; });
    if (it == buckets_.end()) --it;
    return uniform_int(rng, it->begin, it->end - 1);
  }

private:
  struct Bucket {
    std::int64_t begin;
    std::int64_t end;
    double cumulative;
  };
  std::vector<Bucket> buckets_;
};

class BenignTraffic {
public:
  BenignTraffic(const ScenarioConfig& c, std::vector<Pending>& out)
      : c_(c), out_(out), profile_(c), rng_(stream(c.seed, 0xB0)) {
    std::set<std::string> seen;
    while (internet_.size() < c.hosts.internet_hosts) {
      auto token = fmt::format("{}_{}", uniform_int(rng_, 10000, 29999), uniform_int(rng_, 1, 255));
      if (seen.insert(token).second) internet_.push_back(std::move(token));
    }
  }

  void emit(std::size_t count) {
    remaining_ = count;
    while (remaining_ > 0) {
      const auto at = profile_.sample(rng_);
      if (chance(rng_, c_.external_share)) {
        external_session(at);
      } else {
        internal_session(at);
      }
    }
  }

private:
  void push(RawFlow flow, ClassLabel intent) {
    if (remaining_ == 0) return;
    --remaining_;
    flow.date_first_seen.millis =
        std::min(flow.date_first_seen.millis, c_.start.millis + c_.duration_ms);
    out_.push_back(Pending{std::move(flow), GroundTruthRow{0, "---", intent, AttackType::none}});
  }

  std::int64_t latency() { return uniform_int(rng_, 1, 40); }

  std::int64_t tos() { return chance(rng_, 0.05) ? 32 : 0; }

  void web(std::int64_t at, const std::string& client, const std::string& server,
           std::int64_t port, ClassLabel intent) {
    static const std::vector<std::string> flags{".AP.SF", ".AP.S.", ".A...F", ".AP..."};
    const auto sport = ephemeral_port(rng_);
    const auto packets = 3 + static_cast<std::int64_t>(exponential(rng_, 8.0));
    const double duration = std::min(60.0, exponential(rng_, 1.2));
    const auto& f = pick(rng_, flags);
    push(make_flow(at, "TCP", client, sport, server, port, packets,
                   packets * uniform_int(rng_, 60, 400), duration, f, tos()),
         intent);
    const auto reply_packets = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(static_cast<double>(packets) * uniform_real(rng_, 0.8, 1.5)));
    push(make_flow(at + latency(), "TCP", server, port, client, sport, reply_packets,
                   transfer_bytes(reply_packets * uniform_int(rng_, 200, 1460)), duration, f),
         intent);
  }

  void internal_session(std::int64_t at) {
    const auto& client = pick(rng_, c_.hosts.clients);
    const auto& server = pick(rng_, c_.hosts.servers);
    const double roll = uniform_real(rng_, 0.0, 1.0);
    const auto sport = ephemeral_port(rng_);
    if (roll < 0.25) {
      web(at, client, server, 80, ClassLabel::normal);
    } else if (roll < 0.50) {
      web(at, client, server, 443, ClassLabel::normal);
    } else if (roll < 0.70) {
      const auto& dns = c_.hosts.servers.front();
      push(make_flow(at, "UDP", client, sport, dns, 53, 1, uniform_int(rng_, 55, 110), 0.0,
                     "......"),
           ClassLabel::normal);
      push(make_flow(at + latency(), "UDP", dns, 53, client, sport, 1, uniform_int(rng_, 80, 300),
                     0.0, "......"),
           ClassLabel::normal);
    } else if (roll < 0.82) {
      const auto packets = 5 + static_cast<std::int64_t>(exponential(rng_, 60.0));
      const double duration = exponential(rng_, 5.0);
      push(make_flow(at, "TCP", client, sport, server, 445, packets,
                     transfer_bytes(packets * uniform_int(rng_, 100, 1400)), duration, ".AP.S."),
           ClassLabel::normal);
      push(make_flow(at + latency(), "TCP", server, 445, client, sport, packets,
                     transfer_bytes(packets * uniform_int(rng_, 100, 1400)), duration, ".AP.S."),
           ClassLabel::normal);
    } else if (roll < 0.92) {
      const std::int64_t port = chance(rng_, 0.5) ? 25 : 993;
      const auto packets = uniform_int(rng_, 8, 60);
      const double duration = uniform_real(rng_, 0.3, 5.0);
      push(make_flow(at, "TCP", client, sport, server, port, packets,
                     packets * uniform_int(rng_, 150, 1200), duration, ".AP.SF"),
           ClassLabel::normal);
      push(make_flow(at + latency(), "TCP", server, port, client, sport, packets,
                     packets * uniform_int(rng_, 80, 600), duration, ".AP.SF"),
           ClassLabel::normal);
    } else if (roll < 0.96) {
      const auto packets = uniform_int(rng_, 40, 3000);
      const double duration = uniform_real(rng_, 5.0, 900.0);
      push(make_flow(at, "TCP", client, sport, server, 22, packets,
                     transfer_bytes(packets * uniform_int(rng_, 80, 600)), duration, ".AP..."),
           ClassLabel::normal);
      push(make_flow(at + latency(), "TCP", server, 22, client, sport, packets,
                     transfer_bytes(packets * uniform_int(rng_, 80, 600)), duration, ".AP..."),
           ClassLabel::normal);
    } else {
      const auto packets = uniform_int(rng_, 1, 4);
      const double duration = static_cast<double>(packets - 1);
      push(make_flow(at, "ICMP", client, 0, server, icmp_echo_request, packets, 84 * packets,
                     duration, "......"),
           ClassLabel::normal);
      push(make_flow(at + latency(), "ICMP", server, 0, client, icmp_echo_reply, packets,
                     84 * packets, duration, "......"),
           ClassLabel::normal);
    }
  }

  void external_session(std::int64_t at) {
    const auto& ext = c_.hosts.external_server;
    const double roll = uniform_real(rng_, 0.0, 1.0);
    if (roll < 0.40) {
      web(at, c_.hosts.openstack_net, ext, chance(rng_, 0.5) ? 80 : 443, ClassLabel::normal);
    } else if (roll < 0.85) {
      web(at, pick(rng_, internet_), ext, chance(rng_, 0.5) ? 80 : 443, ClassLabel::unknown);
    } else {
      static const std::vector<std::int64_t> ports{22, 23, 25, 1433, 3306, 3389, 5900, 8080};
      const auto& host = pick(rng_, internet_);
      const auto port = pick(rng_, ports);
      const auto sport = ephemeral_port(rng_);
      // Short interactive login attempts against exposed services.
      const auto packets = uniform_int(rng_, 3, 10);
      const double duration = uniform_real(rng_, 0.05, 3.0);
      push(make_flow(at, "TCP", host, sport, ext, port, packets, packets * uniform_int(rng_, 60, 200),
                     duration, chance(rng_, 0.7) ? ".AP.SF" : ".AP.S."),
           ClassLabel::suspicious);
      if (chance(rng_, 0.6)) {
        const auto reply = uniform_int(rng_, 2, 8);
        push(make_flow(at + latency(), "TCP", ext, port, host, sport, reply,
                       reply * uniform_int(rng_, 60, 300), duration, ".AP.SF"),
             ClassLabel::suspicious);
      }
    }
  }

  const ScenarioConfig& c_;
  std::vector<Pending>& out_;
  DiurnalProfile profile_;
  std::mt19937_64 rng_;
  std::vector<std::string> internet_;
  std::size_t remaining_ = 0;
};

// Addresses attacked by an entry, in sweep order.
std::vector<std::string> victim_hosts(const VictimSpec& v) {
  if (v.prefix_octets == 4) return {v.address};
  std::vector<std::string> out;
  const auto prefix = v.address.substr(0, v.address.rfind('.') + 1);
  for (int i = 1; i <= 254; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

bool answers(const ScenarioConfig& c, const std::string& host) {
  return host == c.hosts.external_server ||
         std::find(c.hosts.clients.begin(), c.hosts.clients.end(), host) != c.hosts.clients.end() ||
         std::find(c.hosts.servers.begin(), c.hosts.servers.end(), host) != c.hosts.servers.end();
}

// Victim-side reply to one probe, or nullopt when the victim stays silent.
std::optional<RawFlow> reply_to(const ScenarioConfig& c, const RawFlow& probe, AttackType type,
                                std::mt19937_64& rng) {
  const auto at = probe.date_first_seen.millis + uniform_int(rng, 1, max_reply_latency_ms);
  const auto& victim = probe.dst_ip;
  const auto& attacker = probe.src_ip;
  switch (type) {
    case AttackType::ping_scan:
      if (!answers(c, victim)) return std::nullopt;
      return make_flow(at, "ICMP", victim, 0, attacker, icmp_echo_reply, 1, probe.bytes, 0.0,
                       "......");
    case AttackType::port_scan: {
      if (!chance(rng, 0.9)) return std::nullopt;
      const bool open = std::find(open_ports.begin(), open_ports.end(), probe.dst_port) != open_ports.end();
      return make_flow(at, "TCP", victim, probe.dst_port, attacker, probe.src_port, 1,
                       open ? 44 : 40, 0.0, open ? ".A..S." : ".A.R..");
    }
    case AttackType::dos: {
      if (!chance(rng, 0.5)) return std::nullopt;
      const auto packets = uniform_int(rng, 3, 5);
      return make_flow(at, "TCP", victim, probe.dst_port, attacker, probe.src_port, packets,
                       packets * uniform_int(rng, 900, 1100), probe.duration, ".AP.SF");
    }
    case AttackType::brute_force: {
      const auto packets = uniform_int(rng, 10, 25);
      return make_flow(at, "TCP", victim, probe.dst_port, attacker, probe.src_port, packets,
                       packets * uniform_int(rng, 150, 220), probe.duration, ".AP.SF");
    }
    case AttackType::none: break;
  }
  return std::nullopt;
}

void emit_attack(const ScenarioConfig& c, std::size_t index, std::optional<std::size_t> allocation,
                 std::vector<Pending>& out) {
  const auto& e = c.schedule[index];
  auto rng = stream(c.seed, static_cast<std::uint32_t>(0xA000 + index));
  const auto attacker = *c.hosts.attacker_address(e.attacker);
  const auto victims = victim_hosts(e.victim);
  const auto id = std::to_string(index + 1);
  const auto description = e.victim.render();

  const std::size_t probes_requested = allocation ? *allocation : e.intensity;
  if (probes_requested == 0) return;
  const auto templates = attack_signature(e.type, probes_requested, rng);

  // Decide reply presence first so the probe count is known before timing.
  struct Planned {
    RawFlow probe;
    std::optional<RawFlow> reply;
  };
  std::vector<Planned> plan;
  std::size_t flows = 0;
  for (const auto& t : templates) {
    if (allocation && flows >= *allocation) break;
    RawFlow probe = make_flow(0, t.proto, attacker, t.src_port, victims[t.target % victims.size()],
                              t.dst_port, t.packets, t.bytes, t.duration, t.flags);
    auto reply = reply_to(c, probe, e.type, rng);
    if (allocation && flows + 1 + (reply ? 1 : 0) > *allocation) reply.reset();
    flows += 1 + (reply ? 1 : 0);
    plan.push_back({std::move(probe), std::move(reply)});
  }

  const std::int64_t window_begin = c.start.millis + e.start_ms;
  const std::int64_t usable = e.duration_ms - max_reply_latency_ms;
  const auto n = static_cast<std::int64_t>(plan.size());
  for (std::int64_t i = 0; i < n; ++i) {
    auto& p = plan[static_cast<std::size_t>(i)];
    // Stratified placement: one probe per equal slice of the window.
    const std::int64_t slice_begin = window_begin + usable * i / n;
    const std::int64_t slice_end = window_begin + usable * (i + 1) / n;
    const auto at = uniform_int(rng, slice_begin, std::max(slice_begin, slice_end - 1));
    const auto shift = at - p.probe.date_first_seen.millis;
    p.probe.date_first_seen.millis = at;
    const ClassLabel probe_role = ClassLabel::attacker;
    p.probe.attack_id = id;
    p.probe.attack_description = description;
    out.push_back(Pending{p.probe, GroundTruthRow{0, id, probe_role, e.type}});
    if (p.reply) {
      p.reply->date_first_seen.millis += shift;
      p.reply->attack_id = id;
      p.reply->attack_description = description;
      out.push_back(Pending{*p.reply, GroundTruthRow{0, id, ClassLabel::victim, e.type}});
    }
  }
}

// Largest-remainder split of `total` in proportion to the entry intensities.
std::vector<std::size_t> allocate(std::size_t total, std::span<const ScheduleEntry> schedule) {
  double weight = 0.0;
  for (const auto& e : schedule) weight += static_cast<double>(e.intensity);
  std::vector<std::size_t> share(schedule.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const double exact = static_cast<double>(total) * static_cast<double>(schedule[i].intensity) / weight;
    share[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += share[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++share[remainders[k % remainders.size()].second];
  return share;
}

}  // namespace

std::optional<std::string> HostInventory::attacker_address(const std::string& name) const {
  for (const auto& a : attackers) {
    if (a.name == name) return a.address;
  }
  return std::nullopt;
}

VictimSpec VictimSpec::parse(const std::string& token) {
  VictimSpec v;
  const auto slash = token.find('/');
  if (slash == std::string::npos) {
    v.address = token;
    v.prefix_octets = 4;
    return v;
  }
  v.address = token.substr(0, slash);
  const auto bits = text::to_int(std::string_view(token).substr(slash + 1));
  if (!bits || (*bits != 8 && *bits != 16 && *bits != 24 && *bits != 32)) {
    throw ConfigError("victim prefix must be /8, /16, /24 or /32: '" + token + "'");
  }
  if (std::count(v.address.begin(), v.address.end(), '.') != 3) {
    throw ConfigError("victim prefix needs a dotted-quad address: '" + token + "'");
  }
  v.prefix_octets = static_cast<int>(*bits / 8);
  return v;
}

bool VictimSpec::matches(const std::string& candidate) const {
  if (prefix_octets == 4) return candidate == address;
  const auto a = text::split(address, '.');
  const auto b = text::split(candidate, '.');
  if (b.size() != 4) return false;
  for (int i = 0; i < prefix_octets; ++i) {
    if (a[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

std::string VictimSpec::render() const {
  if (prefix_octets == 4) return address;
  return address + "/" + std::to_string(prefix_octets * 8);
}

std::int64_t parse_span_ms(const std::string& token) {
  auto s = text::trim(token);
  if (s.empty()) throw ConfigError("empty time span");
  double total = 0.0;
  while (!s.empty()) {
    std::size_t digits = 0;
    while (digits < s.size() && ((s[digits] >= '0' && s[digits] <= '9') || s[digits] == '.')) ++digits;
    std::size_t letters = digits;
    while (letters < s.size() && s[letters] >= 'a' && s[letters] <= 'z') ++letters;
    const auto number = text::to_double(s.substr(0, digits));
    const auto unit = s.substr(digits, letters - digits);
    if (!number || *number < 0) throw ConfigError("bad time span '" + token + "'");
    double factor = 0.0;
    if (unit.empty() || unit == "s") {
      factor = 1000.0;
    } else if (unit == "ms") {
      factor = 1.0;
    } else if (unit == "m") {
      factor = 60'000.0;
    } else if (unit == "h") {
      factor = static_cast<double>(ms_per_hour);
    } else if (unit == "d") {
      factor = static_cast<double>(ms_per_day);
    } else {
      throw ConfigError("bad time span unit in '" + token + "'");
    }
    total += *number * factor;
    s = s.substr(letters);
  }
  return static_cast<std::int64_t>(std::llround(total));
}

void ScenarioConfig::check() const {
  if (duration_ms <= 0) throw ConfigError("scenario duration must be positive");
  if (total_flows == 0) throw ConfigError("total_flows must be at least 1");
  if (attack_fraction && !(*attack_fraction >= 0.0 && *attack_fraction < 1.0)) {
    throw ConfigError("attack_fraction must lie in [0, 1)");
  }
  if (!(external_share >= 0.0 && external_share <= 1.0)) {
    throw ConfigError("external_share must lie in [0, 1]");
  }
  if (work_start_hour < 0 || work_end_hour > 24 || work_start_hour >= work_end_hour) {
    throw ConfigError("work_hours must be an increasing range within 0-24");
  }
  if (off_hours_weight < 0.0 || weekend_weight < 0.0) {
    throw ConfigError("diurnal weights must be non-negative");
  }
  if (hosts.clients.empty() || hosts.servers.empty()) {
    throw ConfigError("host inventory needs at least one client and one server");
  }
  if (external_share > 0.0 && hosts.internet_hosts == 0) {
    throw ConfigError("external traffic needs hosts.internet_hosts >= 1");
  }
  std::set<std::string> names;
  for (const auto& a : hosts.attackers) {
    if (!names.insert(a.name).second) throw ConfigError("duplicate attacker name '" + a.name + "'");
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& e = schedule[i];
    const auto where = describe(i, e);
    if (e.type == AttackType::none) throw ConfigError(where + ": attack type must not be none");
    if (e.start_ms < 0) throw ConfigError(where + ": negative start");
    if (e.duration_ms <= 2 * max_reply_latency_ms) {
      throw ConfigError(where + ": duration must exceed " +
                        std::to_string(2 * max_reply_latency_ms) + "ms");
    }
    if (e.start_ms + e.duration_ms > duration_ms) {
      throw ConfigError(where + ": window ends after the scenario");
    }
    if (!hosts.attacker_address(e.attacker)) {
      throw ConfigError(where + ": unknown attacker '" + e.attacker + "'");
    }
    if (e.intensity == 0) throw ConfigError(where + ": intensity must be at least 1");
    if (e.type != AttackType::ping_scan && e.victim.prefix_octets != 4) {
      throw ConfigError(where + ": only ping scans may target a prefix");
    }
    if (e.type == AttackType::ping_scan && e.victim.prefix_octets != 4 && e.victim.prefix_octets != 3) {
      throw ConfigError(where + ": ping scans sweep a single /24 at most");
    }
    if (*hosts.attacker_address(e.attacker) == hosts.openstack_net) {
      throw ConfigError(where + ": attacker address collides with the internal network token");
    }
  }
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  c.seed = 1;
  c.start = parse_timestamp("2017-03-17 14:18:05.000");
  c.duration_ms = parse_timestamp("2017-03-20 17:42:17.000").millis - c.start.millis;
  c.total_flows = 100'000;
  c.attack_fraction = 0.12;
  c.hosts.clients = parse_host_list("192.168.200.2-10, 192.168.210.2-40, 192.168.220.2-30");
  c.hosts.servers = parse_host_list("192.168.100.2-6");
  c.hosts.attackers = {{"attacker1", "ATTACKER1"}, {"attacker2", "ATTACKER2"},
                       {"attacker3", "ATTACKER3"}};
  const auto entry = [](AttackType type, const char* start, const char* span, const char* who,
                        const char* victim, std::size_t intensity) {
    return ScheduleEntry{type, parse_span_ms(start), parse_span_ms(span), who,
                         VictimSpec::parse(victim), intensity};
  };
  using enum AttackType;
  c.schedule = {
      entry(ping_scan, "1h", "20m", "attacker1", "192.168.220.0/24", 250),
      entry(port_scan, "2h", "45m", "attacker1", "192.168.100.5", 1500),
      entry(dos, "3h30m", "20m", "attacker2", "192.168.100.5", 2200),
      entry(brute_force, "5h", "1h", "attacker3", "192.168.100.4", 700),
      entry(ping_scan, "20h", "20m", "attacker2", "192.168.210.0/24", 250),
      entry(port_scan, "26h", "1h", "attacker2", "192.168.100.3", 1300),
      entry(dos, "40h", "30m", "attacker1", "192.168.100.3", 2000),
      entry(brute_force, "44h", "1h", "attacker1", "EXT_SERVER", 600),
      entry(ping_scan, "70h20m", "20m", "attacker3", "192.168.200.0/24", 250),
      entry(port_scan, "71h", "40m", "attacker1", "192.168.100.5", 1300),
      entry(dos, "72h", "20m", "attacker2", "192.168.100.5", 2000),
      entry(brute_force, "73h", "1h", "attacker3", "192.168.100.4", 700),
  };
  return c;
}

ScenarioConfig ScenarioConfig::from(const KeyValueConfig& kv) {
  kv.require_known({"seed", "start", "end", "duration", "total_flows", "attack_fraction",
                    "external_share", "work_hours", "off_hours_weight", "weekend_weight",
                    "hosts."});
  auto c = defaults();
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(c.seed)));
  try {
    if (auto s = kv.get("start")) c.start = parse_timestamp(*s);
    if (auto e = kv.get("end")) c.duration_ms = parse_timestamp(*e).millis - c.start.millis;
  } catch (const DataError& err) {
    throw ConfigError(err.what());
  }
  if (auto d = kv.get("duration")) c.duration_ms = parse_span_ms(*d);
  const auto flows = kv.get_int("total_flows", static_cast<std::int64_t>(c.total_flows));
  if (flows < 0) throw ConfigError("total_flows must be non-negative");
  c.total_flows = static_cast<std::size_t>(flows);
  if (auto f = kv.get("attack_fraction")) {
    if (*f == "none") {
      c.attack_fraction.reset();
    } else {
      c.attack_fraction = kv.get_double("attack_fraction", 0.0);
    }
  }
  c.external_share = kv.get_double("external_share", c.external_share);
  if (auto wh = kv.get("work_hours")) {
    const auto parts = text::split(*wh, '-');
    auto lo = parts.size() == 2 ? text::to_int(text::trim(parts[0])) : std::nullopt;
    auto hi = parts.size() == 2 ? text::to_int(text::trim(parts[1])) : std::nullopt;
    if (!lo || !hi) throw ConfigError("work_hours expects 'start-end', got '" + *wh + "'");
    c.work_start_hour = static_cast<int>(*lo);
    c.work_end_hour = static_cast<int>(*hi);
  }
  c.off_hours_weight = kv.get_double("off_hours_weight", c.off_hours_weight);
  c.weekend_weight = kv.get_double("weekend_weight", c.weekend_weight);

  if (auto v = kv.get("hosts.clients")) c.hosts.clients = parse_host_list(*v);
  if (auto v = kv.get("hosts.servers")) c.hosts.servers = parse_host_list(*v);
  if (auto v = kv.get("hosts.external_server")) c.hosts.external_server = *v;
  if (auto v = kv.get("hosts.openstack_net")) c.hosts.openstack_net = *v;
  if (auto v = kv.get("hosts.internet_hosts")) {
    const auto n = kv.get_int("hosts.internet_hosts", 0);
    if (n < 0) throw ConfigError("hosts.internet_hosts must be non-negative, got " + *v);
    c.hosts.internet_hosts = static_cast<std::size_t>(n);
  }
  if (auto v = kv.get("hosts.attackers")) {
    c.hosts.attackers.clear();
    for (auto part : text::split(*v, ',')) {
      const auto item = text::trim(part);
      if (item.empty()) continue;
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) {
        throw ConfigError("hosts.attackers expects name:address pairs, got '" + std::string(item) + "'");
      }
      c.hosts.attackers.push_back({std::string(text::trim(item.substr(0, colon))),
                                   std::string(text::trim(item.substr(colon + 1)))});
    }
  }

  // A [schedule] section, even an empty one, replaces the default schedule.
  if (kv.blocks().count("schedule")) {
    c.schedule.clear();
    std::size_t n = 0;
    for (const auto& line : kv.block("schedule")) {
      ++n;
      std::vector<std::string> fields;
      for (auto f : text::split(line, ' ')) {
        if (!text::trim(f).empty()) fields.emplace_back(text::trim(f));
      }
      const auto where = "schedule entry " + std::to_string(n);
      if (fields.size() != 6) {
        throw ConfigError(where + ": expected 'type start duration attacker victim intensity'");
      }
      const auto type = parse_attack_type(fields[0]);
      if (!type) throw ConfigError(where + ": unknown attack type '" + fields[0] + "'");
      const auto intensity = text::to_int(fields[5]);
      if (!intensity || *intensity < 0) throw ConfigError(where + ": bad intensity '" + fields[5] + "'");
      c.schedule.push_back(ScheduleEntry{*type, parse_span_ms(fields[1]), parse_span_ms(fields[2]),
                                         fields[3], VictimSpec::parse(fields[4]),
                                         static_cast<std::size_t>(*intensity)});
    }
  }
  c.check();
  return c;
}

KeyValueConfig ScenarioConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("seed", std::to_string(seed));
  kv.set("start", format_timestamp(start));
  kv.set("duration", render_span(duration_ms));
  kv.set("total_flows", std::to_string(total_flows));
  kv.set("attack_fraction", attack_fraction ? text::shortest(*attack_fraction) : "none");
  kv.set("external_share", text::shortest(external_share));
  kv.set("work_hours", std::to_string(work_start_hour) + "-" + std::to_string(work_end_hour));
  kv.set("off_hours_weight", text::shortest(off_hours_weight));
  kv.set("weekend_weight", text::shortest(weekend_weight));
  kv.set("hosts.clients", render_host_list(hosts.clients));
  kv.set("hosts.servers", render_host_list(hosts.servers));
  kv.set("hosts.external_server", hosts.external_server);
  kv.set("hosts.openstack_net", hosts.openstack_net);
  kv.set("hosts.internet_hosts", std::to_string(hosts.internet_hosts));
  std::string attackers;
  for (const auto& a : hosts.attackers) {
    if (!attackers.empty()) attackers += ", ";
    attackers += a.name + ":" + a.address;
  }
  kv.set("hosts.attackers", attackers);
  std::vector<std::string> lines;
  for (const auto& e : schedule) {
    lines.push_back(fmt::format("{} {} {} {} {} {}", config_token(e.type), render_span(e.start_ms),
                                render_span(e.duration_ms), e.attacker, e.victim.render(),
                                e.intensity));
  }
  kv.set_block("schedule", std::move(lines));
  return kv;
}

std::pair<ClassLabel, AttackType> label_openstack(const RawFlow& flow,
                                                  std::span<const ScheduleEntry> schedule,
                                                  const HostInventory& hosts, Timestamp start) {
  if (auto match = match_schedule(flow, schedule, hosts, start)) {
    return {match->second, schedule[match->first].type};
  }
  return {ClassLabel::normal, AttackType::none};
}

ClassLabel label_external(const RawFlow& flow, const HostInventory& hosts) {
  if (flow.src_ip == hosts.openstack_net || flow.dst_ip == hosts.openstack_net) {
    return ClassLabel::normal;
  }
  for (const auto& a : hosts.attackers) {
    if (flow.src_ip == a.address) return ClassLabel::attacker;
  }
  for (const auto& a : hosts.attackers) {
    if (flow.dst_ip == a.address) return ClassLabel::victim;
  }
  const auto web = [](std::int64_t port) { return port == 80 || port == 443; };
  if (web(flow.src_port) || web(flow.dst_port)) return ClassLabel::unknown;
  return ClassLabel::suspicious;
}

std::vector<FlowTemplate> attack_signature(AttackType type, std::size_t intensity,
                                           std::mt19937_64& rng) {
  std::vector<FlowTemplate> out;
  out.reserve(intensity);
  switch (type) {
    case AttackType::ping_scan:
      for (std::size_t i = 0; i < intensity; ++i) {
        const std::int64_t packets = chance(rng, 0.9) ? 1 : 2;
        out.push_back({"ICMP", i, 0, icmp_echo_request, packets, 42 * packets, 0.0, "......"});
      }
      break;
    case AttackType::port_scan: {
      // Sweep a shuffled port range; sweeps longer than the range wrap.
      std::vector<std::int64_t> ports(65535);
      std::iota(ports.begin(), ports.end(), std::int64_t{1});
      std::shuffle(ports.begin(), ports.end(), rng);
      const auto sport = ephemeral_port(rng);
      for (std::size_t i = 0; i < intensity; ++i) {
        const std::int64_t packets = chance(rng, 0.8) ? 1 : 2;
        out.push_back({"TCP", 0, sport, ports[i % ports.size()], packets, 44 * packets,
                       packets == 1 ? 0.0 : millis(uniform_real(rng, 0.0, 0.2)), "....S."});
      }
      break;
    }
    case AttackType::dos:
      for (std::size_t i = 0; i < intensity; ++i) {
        // HTTP request flood: complete short connections, one GET each.
        const auto packets = uniform_int(rng, 4, 6);
        out.push_back({"TCP", 0, ephemeral_port(rng), 80, packets,
                       packets * uniform_int(rng, 60, 80), millis(uniform_real(rng, 0.001, 0.05)),
                       chance(rng, 0.85) ? ".AP.SF" : ".AP.S."});
      }
      break;
    case AttackType::brute_force: {
      for (std::size_t i = 0; i < intensity; ++i) {
        const auto packets = uniform_int(rng, 12, 30);
        out.push_back({"TCP", 0, ephemeral_port(rng), 22, packets,
                       packets * uniform_int(rng, 120, 180), millis(uniform_real(rng, 1.5, 7.5)),
                       ".AP.SF"});
      }
      break;
    }
    case AttackType::none:
      throw ConfigError("attack_signature: no signature for benign traffic");
  }
  return out;
}

Scenario generate(const ScenarioConfig& c) {
  c.check();
  std::vector<Pending> pending;

  std::size_t attack_flows = 0;
  if (!c.schedule.empty()) {
    std::vector<std::optional<std::size_t>> allocation(c.schedule.size());
    if (c.attack_fraction) {
      const auto total = static_cast<std::size_t>(
          std::llround(*c.attack_fraction * static_cast<double>(c.total_flows)));
      const auto shares = allocate(total, c.schedule);
      for (std::size_t i = 0; i < shares.size(); ++i) allocation[i] = shares[i];
    }
    for (std::size_t i = 0; i < c.schedule.size(); ++i) emit_attack(c, i, allocation[i], pending);
    attack_flows = pending.size();
  }
  if (attack_flows > c.total_flows) {
    throw ConfigError("schedule produces " + std::to_string(attack_flows) +
                      " attack flows, more than total_flows = " + std::to_string(c.total_flows));
  }

  BenignTraffic benign(c, pending);
  benign.emit(c.total_flows - attack_flows);

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return a.flow.date_first_seen < b.flow.date_first_seen;
  });

  Scenario scenario;
  scenario.flows.reserve(pending.size());
  scenario.truth.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    auto& [flow, truth] = pending[i];
    const bool external =
        flow.src_ip == c.hosts.external_server || flow.dst_ip == c.hosts.external_server;
    if (external) {
      flow.class_label = label_external(flow, c.hosts);
      flow.attack_type = AttackType::none;
      if (is_attack_role(flow.class_label)) {
        flow.attack_type = label_openstack(flow, c.schedule, c.hosts, c.start).second;
      }
    } else {
      std::tie(flow.class_label, flow.attack_type) =
          label_openstack(flow, c.schedule, c.hosts, c.start);
    }
    if (flow.attack_type == AttackType::none) {
      flow.attack_id = "---";
      flow.attack_description = "---";
    }
    truth.flow_index = i;
    scenario.flows.push_back(std::move(flow));
    scenario.truth.push_back(std::move(truth));
  }
  return scenario;
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthRow> truth) {
  out << "flow_index,attack_id,class,attack_type\n";
  for (const auto& t : truth) {
    out << t.flow_index << ',' << t.attack_id << ',' << to_string(t.class_label) << ','
        << to_string(t.attack_type) << '\n';
  }
}

}  // namespace nids
