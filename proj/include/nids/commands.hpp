#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nids/config.hpp"
#include "nids/eval.hpp"
#include "nids/flow.hpp"

namespace nids {

inline constexpr const char* toolkit_version = "1.0.0";

// Options shared by every subcommand. Values set here override the same
// settings read from the config file.
struct RunOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::filesystem::path out_dir = ".";
  ReportFormat format = ReportFormat::table;  // what the command prints
  bool strict_ingest = false;
  std::optional<std::size_t> memory_budget_mb;
  std::optional<std::string> model;   // train only
  std::optional<std::string> target;  // train and evaluate
  std::vector<std::string> arguments;  // recorded verbatim in the manifest
};

struct RunResult {
  std::vector<std::filesystem::path> outputs;  // manifest.json last
  std::string summary;                         // printed to stdout
};

struct FileDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

FileDigest digest_file(const std::filesystem::path& path);

// Rows kept by a KNN model under a memory budget: one scaled vector, label
// and index slot per row.
std::size_t knn_rows_for_budget(std::size_t budget_mb) noexcept;

// Writes flows.csv, ground_truth.csv and scenario.conf.
RunResult cmd_generate(const RunOptions& options);

// Writes model.bin, test_split.csv and report.{txt,csv,json}, the report
// scoring the held-out split.
RunResult cmd_train(const std::filesystem::path& data, const RunOptions& options);

// Writes report.{txt,csv,json}.
RunResult cmd_evaluate(const std::filesystem::path& model, const std::filesystem::path& data,
                       const RunOptions& options);

// Writes one report per model and target plus comparison.{txt,csv}.
RunResult cmd_compare_labels(const std::filesystem::path& data, const RunOptions& options);

}  // namespace nids
