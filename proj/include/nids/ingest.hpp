#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nids/flow.hpp"

namespace nids {

// Header of a CIDDS-001 flow file, in column order.
inline constexpr std::array<std::string_view, 16> cidds_columns{
    "Date first seen", "Duration", "Proto",   "Src IP Addr", "Src Pt",   "Dst IP Addr",
    "Dst Pt",          "Packets",  "Bytes",   "Flows",       "Flags",    "Tos",
    "class",           "attackType", "attackID", "attackDescription"};

// Decimal number with optional K (10^3) or M (10^6) suffix, rounded half-up.
// Throws DataError on malformed or negative tokens.
std::int64_t parse_bytes(std::string_view token);

// "YYYY-MM-DD HH:MM:SS.fff"; throws DataError on malformed or impossible dates.
Timestamp parse_timestamp(std::string_view token);
std::string format_timestamp(Timestamp ts);

// Ports are integers, optionally printed with a trailing ".0". For ICMP the
// nfdump "type.code" notation is decoded to type * 256 + code.
std::optional<std::int64_t> parse_port(std::string_view token, bool icmp) noexcept;
std::string format_port(std::int64_t port, bool icmp);

struct IngestOptions {
  bool strict = false;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::size_t rows_rejected = 0;
  std::map<std::string, std::size_t> rejection_reasons;
  // Label columns are optional in the header; absent ones default to benign.
  bool has_class = true;
  bool has_attack_type = true;
};

// Streaming reader: holds one line at a time regardless of file size.
class FlowReader {
public:
  FlowReader(const std::filesystem::path& path, IngestOptions options = {});
  FlowReader(std::istream& input, IngestOptions options = {});

  // Next accepted flow in file order, or nullopt at end of input.
  std::optional<RawFlow> next();

  const IngestReport& report() const noexcept { return report_; }

private:
  void read_header();
  bool parse_row(const std::vector<std::string>& fields, RawFlow& flow, std::string& reason) const;
  void reject(const std::string& reason);

  std::unique_ptr<std::ifstream> owned_;
  std::istream* in_;
  IngestOptions options_;
  IngestReport report_;
  // column index in the file for each cidds_columns entry, -1 when absent
  std::array<int, 16> column_of_{};
  std::size_t column_count_ = 0;
  std::size_t line_number_ = 0;
  std::string line_;
};

std::vector<RawFlow> read_flows(const std::filesystem::path& path, IngestOptions options = {},
                                IngestReport* report = nullptr);

std::string csv_header();
std::string render_csv_row(const RawFlow& flow);
void write_flows(std::ostream& out, std::span<const RawFlow> flows);

// Byte count as CIDDS-001 prints it: values of at least one million that are a
// whole multiple of 100000 use the "x.y M" form, everything else is plain.
std::string format_bytes(std::int64_t bytes);

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace nids
