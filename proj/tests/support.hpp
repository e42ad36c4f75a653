#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "nids/flow.hpp"
#include "nids/ingest.hpp"

namespace testing {

inline nids::RawFlow tcp_flow(std::int64_t millis = 0, std::string src = "192.168.220.5",
                              std::string dst = "192.168.100.3", std::int64_t dport = 443) {
  nids::RawFlow f;
  f.date_first_seen = nids::Timestamp{millis};
  f.duration = 0.25;
  f.proto = "TCP";
  f.src_ip = std::move(src);
  f.src_port = 51234;
  f.dst_ip = std::move(dst);
  f.dst_port = dport;
  f.packets = 6;
  f.bytes = 900;
  f.flows = 1;
  f.flags = ".AP.SF";
  f.tos = 0;
  f.attack_id = "---";
  f.attack_description = "---";
  return f;
}

// Uniform random points in [0, 1)^10 with labels in [0, n_classes).
inline nids::Dataset random_dataset(std::size_t n, int n_classes, std::mt19937_64& rng,
                                    double grid = 0.0) {
  nids::Dataset d;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, n_classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    nids::FeatureVector v{};
    for (auto& x : v) {
      x = u(rng);
      // snapping to a grid forces exact distance ties
      if (grid > 0.0) x = std::floor(x / grid) * grid;
    }
    d.rows.push_back(v);
    d.targets.push_back(label(rng));
    d.timestamps.push_back(nids::Timestamp{static_cast<std::int64_t>(i)});
  }
  return d;
}

// Two classes split by x0 + x1 = 1 with a margin; the other features are noise.
inline nids::Dataset separable_dataset(std::size_t n, std::mt19937_64& rng) {
  nids::Dataset d;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (d.rows.size() < n) {
    nids::FeatureVector v{};
    for (auto& x : v) x = u(rng);
    const double s = v[0] + v[1];
    if (std::abs(s - 1.0) < 0.05) continue;
    d.rows.push_back(v);
    d.targets.push_back(s > 1.0 ? 1 : 0);
    d.timestamps.push_back(nids::Timestamp{static_cast<std::int64_t>(d.rows.size())});
  }
  return d;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nids_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testing
