#include <doctest.h>

#include <sstream>

#include "nids/error.hpp"
#include "nids/ingest.hpp"
#include "support.hpp"

using namespace nids;

namespace {

const std::string header =
    "Date first seen,Duration,Proto,Src IP Addr,Src Pt,Dst IP Addr,Dst Pt,Packets,Bytes,Flows,"
    "Flags,Tos,class,attackType,attackID,attackDescription\n";

std::vector<RawFlow> read_all(const std::string& text, IngestReport* report = nullptr,
                              bool strict = false) {
  std::istringstream in(text);
  FlowReader reader(in, IngestOptions{strict});
  std::vector<RawFlow> out;
  while (auto f = reader.next()) out.push_back(*f);
  if (report) *report = reader.report();
  return out;
}

}  // namespace

TEST_CASE("parse_bytes handles plain numbers and decimal suffixes") {
  CHECK(parse_bytes("1024") == 1024);
  CHECK(parse_bytes("1.5 M") == 1'500'000);
  CHECK(parse_bytes("3.27K") == 3270);
  CHECK(parse_bytes("2.1 M") == 2'100'000);
  CHECK(parse_bytes(" 0 ") == 0);
  CHECK(parse_bytes("1.0005 K") == 1001);  // half rounds up
  CHECK(parse_bytes("1.0004 K") == 1000);
}

TEST_CASE("parse_bytes rejects malformed and negative tokens") {
  CHECK_THROWS_AS(parse_bytes(""), DataError);
  CHECK_THROWS_AS(parse_bytes("abc"), DataError);
  CHECK_THROWS_AS(parse_bytes("-5"), DataError);
  CHECK_THROWS_AS(parse_bytes("1.5 G"), DataError);
  CHECK_THROWS_AS(parse_bytes("1..5"), DataError);
  CHECK_THROWS_AS(parse_bytes("M"), DataError);
}

TEST_CASE("parse_bytes is monotone") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5000.0);
  const char* suffixes[] = {"", " K", " M"};
  const double mult[] = {1.0, 1e3, 1e6};
  std::vector<std::pair<double, std::int64_t>> samples;
  for (int i = 0; i < 2000; ++i) {
    const int s = static_cast<int>(rng() % 3);
    const double value = std::round(u(rng) * 100.0) / 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%s", value, suffixes[s]);
    samples.emplace_back(value * mult[s], parse_bytes(buf));
  }
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].first > samples[i - 1].first) CHECK(samples[i].second >= samples[i - 1].second);
  }
}

TEST_CASE("parse_timestamp reads millisecond wall-clock times") {
  // epoch milliseconds computed independently, treating the text as UTC
  CHECK(parse_timestamp("2017-03-17 14:18:05.000").millis == 1489760285000);
  CHECK(parse_timestamp("2017-03-20 17:42:17.000").millis == 1490031737000);
  CHECK(parse_timestamp("2017-03-20 17:42:17.123").millis == 1490031737123);
  CHECK(format_timestamp(parse_timestamp("2017-03-17 14:18:05.042")) == "2017-03-17 14:18:05.042");
}

TEST_CASE("parse_timestamp rejects malformed tokens") {
  try {
    parse_timestamp("2017-13-01 00:00:00.000");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("month out of range") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_timestamp("2017-02-30 00:00:00.000"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2017-03-17 14:18:05"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2017-03-17T14:18:05.000"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2017-03-17 24:00:00.000"), DataError);
}

TEST_CASE("timestamp order matches string order") {
  std::vector<std::string> tokens{"2017-03-17 14:18:05.000", "2017-03-17 14:18:05.001",
                                  "2017-03-17 23:59:59.999", "2017-03-18 00:00:00.000",
                                  "2017-12-31 23:59:59.999", "2018-01-01 00:00:00.000"};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      CHECK((parse_timestamp(tokens[i]) < parse_timestamp(tokens[j])) == (tokens[i] < tokens[j]));
    }
  }
}

TEST_CASE("ports decode ICMP type.code notation") {
  CHECK(parse_port("443", false) == 443);
  CHECK(parse_port("443.0", false) == 443);
  CHECK(parse_port("8.0", true) == 2048);
  CHECK(parse_port("3.3", true) == 771);
  CHECK_FALSE(parse_port("3.3", false).has_value());
  CHECK_FALSE(parse_port("x", false).has_value());
  CHECK(format_port(2048, true) == "8.0");
  CHECK(format_port(443, false) == "443");
}

TEST_CASE("a clean three-row file yields three flows") {
  const auto text = header +
                    "2017-03-15 00:01:16.632,0.000,TCP,192.168.100.5,445,192.168.220.16,58844,1,108,1,.AP...,0,normal,---,---,---\n"
                    "2017-03-15 00:01:16.552,0.000,TCP,192.168.220.16,58844,192.168.100.5,445,1,55,1,.AP...,0,normal,---,---,---\n"
                    "2017-03-15 00:01:16.551,0.004,TCP,192.168.220.15,48888,192.168.100.5,445,2,2.1 M,1,.AP...,0,normal,---,---,---\n";
  IngestReport report;
  const auto flows = read_all(text, &report);
  REQUIRE(flows.size() == 3);
  CHECK(report.rows_read == 3);
  CHECK(report.rows_accepted == 3);
  CHECK(report.rows_rejected == 0);
  CHECK(flows[2].bytes == 2'100'000);
  CHECK(flows[0].bytes == 108);
  CHECK(flows[1].date_first_seen.millis < flows[0].date_first_seen.millis);  // file order kept
}

TEST_CASE("rows with bad fields are counted and skipped") {
  const auto good = "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,normal,---,---,---\n";
  const auto text = header + good +
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,banana,---,---,---\n"
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,normal,ddos,---,---\n"
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b\n"
                    "2017-03-15 00:01:16.632,0.000,TCP,a,70000,b,2,1,1,1,......,0,normal,---,---,---\n"
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,normal,dos,1,x\n"
                    "2017-03-15 00:01:16.632,-1.0,TCP,a,1,b,2,1,1,1,......,0,normal,---,---,---\n"
                    "not a time,0.000,TCP,a,1,b,2,1,1,1,......,0,normal,---,---,---\n"
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,lots,1,......,0,normal,---,---,---\n" +
                    good;
  IngestReport report;
  const auto flows = read_all(text, &report);
  CHECK(flows.size() == 2);
  CHECK(report.rows_read == 10);
  CHECK(report.rows_read == report.rows_accepted + report.rows_rejected);
  CHECK(report.rejection_reasons.at("unknown class label") == 1);
  CHECK(report.rejection_reasons.at("unknown attack type") == 1);
  CHECK(report.rejection_reasons.at("wrong field count") == 1);
  CHECK(report.rejection_reasons.at("port out of range") == 1);
  CHECK(report.rejection_reasons.at("label inconsistency") == 1);
  CHECK(report.rejection_reasons.at("malformed timestamp") == 1);
  CHECK(report.rejection_reasons.at("malformed bytes") == 1);
  CHECK(report.rejection_reasons.count("negative duration") + report.rejection_reasons.count("malformed duration") == 1);
}

TEST_CASE("strict mode aborts at the first malformed row") {
  const auto text = header +
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,normal,---,---,---\n"
                    "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,banana,---,---,---\n";
  try {
    read_all(text, nullptr, true);
    FAIL("expected an error");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("unknown class label") != std::string::npos);
  }
}

TEST_CASE("header problems are errors") {
  CHECK_THROWS_AS(read_all(""), DataError);
  CHECK_THROWS_AS(read_all("a,b,c\n"), DataError);
  CHECK_THROWS_AS(read_all("Duration,Date first seen,Proto,Src IP Addr,Src Pt,Dst IP Addr,Dst Pt,"
                           "Packets,Bytes,Flows,Flags,Tos\n"),
                  DataError);
  CHECK_THROWS_AS(read_flows("/nonexistent/flows.csv"), DataError);
}

TEST_CASE("label columns are optional") {
  const std::string text =
      "Date first seen,Duration,Proto,Src IP Addr,Src Pt,Dst IP Addr,Dst Pt,Packets,Bytes,Flows,"
      "Flags,Tos,class\n"
      "2017-03-15 00:01:16.632,0.000,TCP,a,1,b,2,1,1,1,......,0,victim\n";
  IngestReport report;
  const auto flows = read_all(text, &report);
  REQUIRE(flows.size() == 1);
  CHECK(report.has_class);
  CHECK_FALSE(report.has_attack_type);
  CHECK(flows[0].class_label == ClassLabel::victim);
  CHECK(flows[0].attack_type == AttackType::none);
}

TEST_CASE("proto and flags are trimmed but keep their case") {
  const auto text = header +
                    "2017-03-15 00:01:16.632,0.000, TCP  ,a,1,b,2,1,1,1,  .A..S. ,0,normal,---,---,---\n"
                    "2017-03-15 00:01:16.632,0.000,tcp,a,1,b,2,1,1,1,0x12,0,normal,---,---,---\n";
  const auto flows = read_all(text);
  REQUIRE(flows.size() == 2);
  CHECK(flows[0].proto == "TCP");
  CHECK(flows[0].flags == ".A..S.");
  CHECK(flows[1].proto == "tcp");
  CHECK(flows[1].flags == "0x12");
}

TEST_CASE("rendering and re-parsing reproduces every flow") {
  std::mt19937_64 rng(5);
  std::vector<RawFlow> flows;
  const char* protos[] = {"TCP", "UDP", "ICMP", "GRE"};
  for (int i = 0; i < 500; ++i) {
    auto f = testing::tcp_flow(1489760285000 + static_cast<std::int64_t>(rng() % 100'000'000));
    f.proto = protos[rng() % 4];
    f.duration = static_cast<double>(rng() % 100'000) / 1000.0;
    if (i % 7 == 0) f.duration = 1.0 / 3.0;  // not a whole millisecond
    f.src_port = static_cast<std::int64_t>(rng() % 65536);
    f.dst_port = static_cast<std::int64_t>(rng() % 65536);
    f.packets = static_cast<std::int64_t>(rng() % 10'000);
    f.bytes = i % 3 == 0 ? static_cast<std::int64_t>(rng() % 90 + 10) * 100'000
                         : static_cast<std::int64_t>(rng() % 10'000'000);
    f.tos = static_cast<std::int64_t>(rng() % 256);
    f.class_label = all_class_labels[rng() % 5];
    f.attack_type = f.class_label == ClassLabel::normal ? AttackType::none : all_attack_types[rng() % 5];
    f.attack_id = f.attack_type == AttackType::none ? "---" : std::to_string(rng() % 100);
    f.attack_description = i % 11 == 0 ? "a, quoted \"text\"" : "---";
    flows.push_back(f);
  }
  std::ostringstream out;
  write_flows(out, flows);
  IngestReport report;
  const auto back = read_all(out.str(), &report);
  CHECK(report.rows_rejected == 0);
  REQUIRE(back.size() == flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) CHECK(back[i] == flows[i]);
}

TEST_CASE("byte counts render in the CIDDS style") {
  CHECK(format_bytes(999'999) == "999999");
  CHECK(format_bytes(2'100'000) == "2.1 M");
  CHECK(format_bytes(2'000'000) == "2.0 M");
  CHECK(format_bytes(2'150'000) == "2150000");
  CHECK(parse_bytes(format_bytes(2'100'000)) == 2'100'000);
}

TEST_CASE("split_csv_line honours quotes") {
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("\"x,y\",\"say \"\"hi\"\"\"") == std::vector<std::string>{"x,y", "say \"hi\""});
}
