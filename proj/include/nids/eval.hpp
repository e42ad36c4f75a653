#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nids {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }

  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_.size() + predicted];
  }
  void add(std::size_t truth, std::size_t predicted, std::size_t n = 1) {
    counts_[truth * classes_.size() + predicted] += n;
  }

  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
  std::size_t row_sum(std::size_t c) const noexcept;
  std::size_t column_sum(std::size_t c) const noexcept;

private:
  std::vector<std::string> classes_;
  std::vector<std::size_t> counts_;
};

// Labels are indices into `classes`. Throws DataError on length mismatch or
// an index outside the class list.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<std::string> classes);

// 0/0 cases evaluate to 0.
double precision(const ConfusionMatrix& cm, std::size_t c) noexcept;
double recall(const ConfusionMatrix& cm, std::size_t c) noexcept;
double f1(const ConfusionMatrix& cm, std::size_t c) noexcept;
double f1_score(double precision, double recall) noexcept;

// trace / total; throws DataError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

struct ClassScores {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Unweighted means over every entry.
MacroScores macro(std::span<const ClassScores> per_class);

struct EvaluationReport {
  std::string model_kind;
  std::string target_scheme;
  std::uint64_t seed = 0;
  std::string data_first_seen;
  std::string data_last_seen;
  ConfusionMatrix matrix;
  std::vector<ClassScores> per_class;
  double accuracy = 0.0;
  MacroScores macro;
};

// Scores predictions against truth. The report covers the classes of
// `class_list` that occur in either column, in class-list order; `display`
// optionally renames them for output.
EvaluationReport evaluate(std::span<const int> truth, std::span<const int> predicted,
                          const std::vector<std::string>& class_list,
                          const std::vector<std::string>& display = {});

enum class ReportFormat : std::uint8_t { table, csv, machine };

std::optional<ReportFormat> parse_report_format(std::string_view token) noexcept;
std::string_view file_extension(ReportFormat format) noexcept;

// Metrics print with 4 decimals in table and CSV form; the machine form is
// JSON carrying full precision plus the confusion matrix.
std::string render_report(const EvaluationReport& report, ReportFormat format);

// Reads the per-class rows (and macro row) written by the CSV renderer.
std::vector<ClassScores> parse_report_csv(std::string_view csv);

}  // namespace nids
