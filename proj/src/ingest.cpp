#include "nids/ingest.hpp"

#include <chrono>
#include <cstdio>

#include "nids/error.hpp"
#include "nids/text.hpp"

namespace nids {

namespace {

constexpr int first_label_column = 12;

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool is_icmp(std::string_view proto) noexcept { return proto == "ICMP"; }

// Parses a fixed-width unsigned field at s[pos, pos+width).
std::optional<int> fixed_field(std::string_view s, std::size_t pos, std::size_t width) {
  int value = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (!is_digit(s[i])) return std::nullopt;
    value = value * 10 + (s[i] - '0');
  }
  return value;
}

std::string format_duration(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  if (auto back = text::to_double(buf); back && *back == seconds) return buf;
  return text::shortest(seconds);
}

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::int64_t parse_bytes(std::string_view token) {
  auto s = text::trim(token);
  if (s.empty()) throw DataError("malformed bytes token: empty");
  if (s.front() == '-') throw DataError("negative bytes value: " + std::string(token));

  std::int64_t multiplier = 1;
  if (s.back() == 'K' || s.back() == 'M') {
    multiplier = s.back() == 'K' ? 1'000 : 1'000'000;
    s = text::trim(s.substr(0, s.size() - 1));
  }

  // Exact decimal arithmetic: mantissa digits and the count of fractional ones.
  const auto too_large = [&] { return DataError("bytes value too large: " + std::string(token)); };
  std::uint64_t mantissa = 0;
  int fraction_digits = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (is_digit(c)) {
      seen_digit = true;
      if (mantissa > 100'000'000'000'000'000ULL) throw too_large();
      mantissa = mantissa * 10 + static_cast<unsigned>(c - '0');
      if (seen_point) ++fraction_digits;
    } else {
      throw DataError("malformed bytes token: " + std::string(token));
    }
  }
  if (!seen_digit) throw DataError("malformed bytes token: " + std::string(token));
  if (fraction_digits > 18) throw DataError("bytes token too precise: " + std::string(token));

  std::uint64_t scale = 1;
  for (int i = 0; i < fraction_digits; ++i) scale *= 10;
  const auto mult = static_cast<std::uint64_t>(multiplier);
  if (mantissa > static_cast<std::uint64_t>(INT64_MAX) / mult) throw too_large();
  const std::uint64_t numerator = mantissa * mult;
  const std::uint64_t rounded = numerator / scale + (2 * (numerator % scale) >= scale ? 1 : 0);
  return static_cast<std::int64_t>(rounded);
}

std::string format_bytes(std::int64_t bytes) {
  if (bytes >= 1'000'000 && bytes % 100'000 == 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%lld.%lld M", static_cast<long long>(bytes / 1'000'000),
                  static_cast<long long>((bytes / 100'000) % 10));
    return buf;
  }
  return std::to_string(bytes);
}

Timestamp parse_timestamp(std::string_view token) {
  using namespace std::chrono;
  const auto s = text::trim(token);
  const auto fail = [&](const char* why) {
    return DataError(std::string("malformed timestamp '") + std::string(token) + "': " + why);
  };
  if (s.size() != 23 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':' ||
      s[16] != ':' || s[19] != '.') {
    throw fail("expected YYYY-MM-DD HH:MM:SS.fff");
  }
  auto y = fixed_field(s, 0, 4), mo = fixed_field(s, 5, 2), d = fixed_field(s, 8, 2);
  auto h = fixed_field(s, 11, 2), mi = fixed_field(s, 14, 2), sec = fixed_field(s, 17, 2);
  auto ms = fixed_field(s, 20, 3);
  if (!y || !mo || !d || !h || !mi || !sec || !ms) throw fail("non-digit field");
  if (*mo < 1 || *mo > 12) throw fail("month out of range");
  const year_month_day date{year{*y}, month{static_cast<unsigned>(*mo)},
                            day{static_cast<unsigned>(*d)}};
  if (!date.ok()) throw fail("day out of range");
  if (*h > 23 || *mi > 59 || *sec > 59) throw fail("time of day out of range");

  const auto days = sys_days{date}.time_since_epoch().count();
  const std::int64_t millis =
      ((static_cast<std::int64_t>(days) * 24 + *h) * 60 + *mi) * 60'000 + *sec * 1000 + *ms;
  return Timestamp{millis};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  constexpr std::int64_t ms_per_day = 86'400'000;
  std::int64_t days = ts.millis / ms_per_day;
  std::int64_t rem = ts.millis % ms_per_day;
  if (rem < 0) {
    rem += ms_per_day;
    --days;
  }
  const year_month_day date{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02lld:%02lld:%02lld.%03lld",
                static_cast<int>(date.year()), static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()), static_cast<long long>(rem / 3'600'000),
                static_cast<long long>(rem / 60'000 % 60), static_cast<long long>(rem / 1000 % 60),
                static_cast<long long>(rem % 1000));
  return buf;
}

std::optional<std::int64_t> parse_port(std::string_view token, bool icmp) noexcept {
  const auto s = text::trim(token);
  const auto dot = s.find('.');
  if (dot == std::string_view::npos) return text::to_int(s);
  auto whole = text::to_int(s.substr(0, dot));
  auto frac = text::to_int(s.substr(dot + 1));
  if (!whole || !frac || *whole < 0 || *frac < 0) return std::nullopt;
  if (icmp) {
    if (*whole > 255 || *frac > 255) return std::nullopt;
    return *whole * 256 + *frac;
  }
  if (*frac != 0) return std::nullopt;
  return whole;
}

std::string format_port(std::int64_t port, bool icmp) {
  if (icmp && port >= 0 && port <= 65535) {
    return std::to_string(port / 256) + "." + std::to_string(port % 256);
  }
  return std::to_string(port);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

FlowReader::FlowReader(const std::filesystem::path& path, IngestOptions options)
    : owned_(std::make_unique<std::ifstream>(path)), in_(owned_.get()), options_(options) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  if (!*owned_) throw DataError("cannot open file: " + path.string());
  read_header();
}

FlowReader::FlowReader(std::istream& input, IngestOptions options)
    : in_(&input), options_(options) {
  read_header();
}

void FlowReader::read_header() {
  column_of_.fill(-1);
  if (!std::getline(*in_, line_)) throw DataError("unrecognized header: empty input");
  ++line_number_;
  std::string_view header = line_;
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto names = split_csv_line(header);
  column_count_ = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto name = text::trim(names[i]);
    int known = -1;
    for (std::size_t k = 0; k < cidds_columns.size(); ++k) {
      if (name == cidds_columns[k]) known = static_cast<int>(k);
    }
    if (known < 0) throw DataError("unrecognized header: unknown column '" + std::string(name) + "'");
    if (known < first_label_column && known != static_cast<int>(i)) {
      throw DataError("unrecognized header: column '" + std::string(name) + "' out of order");
    }
    if (column_of_[known] >= 0) {
      throw DataError("unrecognized header: duplicate column '" + std::string(name) + "'");
    }
    column_of_[known] = static_cast<int>(i);
  }
  for (int k = 0; k < first_label_column; ++k) {
    if (column_of_[k] < 0) {
      throw DataError("unrecognized header: missing column '" + std::string(cidds_columns[k]) + "'");
    }
  }
  report_.has_class = column_of_[12] >= 0;
  report_.has_attack_type = column_of_[13] >= 0;
}

void FlowReader::reject(const std::string& reason) {
  if (options_.strict) {
    throw DataError("row " + std::to_string(report_.rows_read) + " (line " + std::to_string(line_number_) +
                    "): " + reason);
  }
  ++report_.rows_rejected;
  ++report_.rejection_reasons[reason];
}

bool FlowReader::parse_row(const std::vector<std::string>& fields, RawFlow& flow,
                           std::string& reason) const {
  const auto field = [&](int column) -> std::string_view {
    const int at = column_of_[column];
    return at < 0 ? std::string_view{} : text::trim(fields[at]);
  };
  const auto integer = [&](int column, std::int64_t& out, const char* what) {
    auto v = text::to_int(field(column));
    if (!v) {
      reason = std::string("malformed ") + what;
      return false;
    }
    out = *v;
    return true;
  };

  try {
    flow.date_first_seen = parse_timestamp(field(0));
  } catch (const DataError&) {
    reason = "malformed timestamp";
    return false;
  }
  auto duration = text::to_double(field(1));
  if (!duration) {
    reason = "malformed duration";
    return false;
  }
  flow.duration = *duration;
  flow.proto = std::string(field(2));
  flow.src_ip = std::string(field(3));
  flow.dst_ip = std::string(field(5));
  const bool icmp = is_icmp(flow.proto);
  auto src_port = parse_port(field(4), icmp);
  auto dst_port = parse_port(field(6), icmp);
  if (!src_port || !dst_port) {
    reason = "malformed port";
    return false;
  }
  flow.src_port = *src_port;
  flow.dst_port = *dst_port;
  if (!integer(7, flow.packets, "packets")) return false;
  try {
    flow.bytes = parse_bytes(field(8));
  } catch (const DataError&) {
    reason = "malformed bytes";
    return false;
  }
  if (!integer(9, flow.flows, "flows")) return false;
  flow.flags = std::string(field(10));
  if (!integer(11, flow.tos, "tos")) return false;

  flow.class_label = ClassLabel::normal;
  if (column_of_[12] >= 0) {
    auto label = parse_class_label(field(12));
    if (!label) {
      reason = "unknown class label";
      return false;
    }
    flow.class_label = *label;
  }
  flow.attack_type = AttackType::none;
  if (column_of_[13] >= 0) {
    auto type = parse_attack_type(field(13));
    if (!type) {
      reason = "unknown attack type";
      return false;
    }
    flow.attack_type = *type;
  }
  flow.attack_id = std::string(field(14));
  flow.attack_description = std::string(field(15));

  if (auto violations = validate(flow); !violations.empty()) {
    reason = violations.front();
    return false;
  }
  return true;
}

std::optional<RawFlow> FlowReader::next() {
  while (std::getline(*in_, line_)) {
    ++line_number_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (text::trim(line_).empty()) continue;
    ++report_.rows_read;
    const auto fields = split_csv_line(line_);
    if (fields.size() != column_count_) {
      reject("wrong field count");
      continue;
    }
    RawFlow flow;
    std::string reason;
    if (!parse_row(fields, flow, reason)) {
      reject(reason);
      continue;
    }
    ++report_.rows_accepted;
    return flow;
  }
  return std::nullopt;
}

std::vector<RawFlow> read_flows(const std::filesystem::path& path, IngestOptions options,
                                IngestReport* report) {
  FlowReader reader(path, options);
  std::vector<RawFlow> flows;
  while (auto flow = reader.next()) flows.push_back(std::move(*flow));
  if (report) *report = reader.report();
  return flows;
}

std::string csv_header() {
  std::string header;
  for (std::size_t i = 0; i < cidds_columns.size(); ++i) {
    if (i) header += ',';
    header += cidds_columns[i];
  }
  return header;
}

std::string render_csv_row(const RawFlow& flow) {
  const bool icmp = is_icmp(flow.proto);
  std::string row;
  row.reserve(160);
  row += format_timestamp(flow.date_first_seen);
  row += ',';
  row += format_duration(flow.duration);
  row += ',';
  row += flow.proto;
  row += ',';
  row += flow.src_ip;
  row += ',';
  row += format_port(flow.src_port, icmp);
  row += ',';
  row += flow.dst_ip;
  row += ',';
  row += format_port(flow.dst_port, icmp);
  row += ',';
  row += std::to_string(flow.packets);
  row += ',';
  row += format_bytes(flow.bytes);
  row += ',';
  row += std::to_string(flow.flows);
  row += ',';
  row += flow.flags;
  row += ',';
  row += std::to_string(flow.tos);
  row += ',';
  row += to_string(flow.class_label);
  row += ',';
  row += to_string(flow.attack_type);
  row += ',';
  row += quote_if_needed(flow.attack_id);
  row += ',';
  row += quote_if_needed(flow.attack_description);
  return row;
}

void write_flows(std::ostream& out, std::span<const RawFlow> flows) {
  out << csv_header() << '\n';
  for (const auto& flow : flows) out << render_csv_row(flow) << '\n';
}

}  // namespace nids
