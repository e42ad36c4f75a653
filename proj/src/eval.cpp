#include "nids/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <json.hpp>

#include "nids/error.hpp"
#include "nids/ingest.hpp"
#include "nids/text.hpp"

namespace nids {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t sum = 0;
  for (std::size_t c = 0; c < size(); ++c) sum += at(c, c);
  return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t c) const noexcept {
  std::size_t sum = 0;
  for (std::size_t j = 0; j < size(); ++j) sum += at(c, j);
  return sum;
}

std::size_t ConfusionMatrix::column_sum(std::size_t c) const noexcept {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < size(); ++i) sum += at(i, c);
  return sum;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<std::string> classes) {
  if (truth.size() != predicted.size()) {
    throw DataError("confusion: " + std::to_string(truth.size()) + " true labels but " +
                    std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(std::move(classes));
  const auto valid = [&](int label) { return label >= 0 && static_cast<std::size_t>(label) < cm.size(); };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!valid(truth[i]) || !valid(predicted[i])) {
      throw DataError("confusion: label outside the class list at row " + std::to_string(i));
    }
    cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

double precision(const ConfusionMatrix& cm, std::size_t c) noexcept {
  const auto predicted = cm.column_sum(c);
  return predicted == 0 ? 0.0 : static_cast<double>(cm.at(c, c)) / static_cast<double>(predicted);
}

double recall(const ConfusionMatrix& cm, std::size_t c) noexcept {
  const auto actual = cm.row_sum(c);
  return actual == 0 ? 0.0 : static_cast<double>(cm.at(c, c)) / static_cast<double>(actual);
}

double f1_score(double p, double r) noexcept {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double f1(const ConfusionMatrix& cm, std::size_t c) noexcept {
  return f1_score(precision(cm, c), recall(cm, c));
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw DataError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

MacroScores macro(std::span<const ClassScores> per_class) {
  if (per_class.empty()) throw DataError("macro average over an empty class list");
  MacroScores m;
  for (const auto& s : per_class) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const auto n = static_cast<double>(per_class.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

EvaluationReport evaluate(std::span<const int> truth, std::span<const int> predicted,
                          const std::vector<std::string>& class_list,
                          const std::vector<std::string>& display) {
  if (truth.empty()) throw DataError("nothing to evaluate: no rows");
  const auto full = confusion(truth, predicted, class_list);

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < full.size(); ++c) {
    if (full.row_sum(c) > 0 || full.column_sum(c) > 0) kept.push_back(c);
  }
  std::vector<std::string> names;
  for (auto c : kept) names.push_back(c < display.size() ? display[c] : class_list[c]);

  EvaluationReport report;
  report.matrix = ConfusionMatrix(names);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < kept.size(); ++j) report.matrix.add(i, j, full.at(kept[i], kept[j]));
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    report.per_class.push_back(ClassScores{
        .name = names[i],
        .precision = precision(report.matrix, i),
        .recall = recall(report.matrix, i),
        .f1 = f1(report.matrix, i),
        .support = report.matrix.row_sum(i),
    });
  }
  report.accuracy = accuracy(report.matrix);
  report.macro = macro(report.per_class);
  return report;
}

std::optional<ReportFormat> parse_report_format(std::string_view token) noexcept {
  if (token == "table") return ReportFormat::table;
  if (token == "csv") return ReportFormat::csv;
  if (token == "machine") return ReportFormat::machine;
  return std::nullopt;
}

std::string_view file_extension(ReportFormat format) noexcept {
  switch (format) {
    case ReportFormat::table: return "txt";
    case ReportFormat::csv: return "csv";
    case ReportFormat::machine: return "json";
  }
  return "txt";
}

namespace {

std::string render_table(const EvaluationReport& r) {
  std::size_t width = std::string_view("Macro avg").size();
  for (const auto& s : r.per_class) width = std::max(width, s.name.size());
  std::string out = fmt::format("Model: {}  Target: {}  Rows: {}\n", r.model_kind,
                                r.target_scheme, r.matrix.total());
  out += fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}  {:>9}\n", "Class", width, "Precision",
                     "Recall", "F1-Score", "Support");
  for (const auto& s : r.per_class) {
    out += fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>9}\n", s.name, width,
                       s.precision, s.recall, s.f1, s.support);
  }
  out += fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>9}\n", "Macro avg", width,
                     r.macro.precision, r.macro.recall, r.macro.f1, r.matrix.total());
  out += fmt::format("{:<{}}  {:>9.4f}\n", "Accuracy", width, r.accuracy);
  return out;
}

std::string render_csv(const EvaluationReport& r) {
  std::string out = "class,precision,recall,f1,support\n";
  for (const auto& s : r.per_class) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{}\n", s.name, s.precision, s.recall, s.f1,
                       s.support);
  }
  out += fmt::format("macro_avg,{:.4f},{:.4f},{:.4f},{}\n", r.macro.precision, r.macro.recall,
                     r.macro.f1, r.matrix.total());
  return out;
}

std::string render_machine(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["model_kind"] = r.model_kind;
  j["target_scheme"] = r.target_scheme;
  j["seed"] = r.seed;
  j["data_first_seen"] = r.data_first_seen;
  j["data_last_seen"] = r.data_last_seen;
  j["rows"] = r.matrix.total();
  j["accuracy"] = r.accuracy;
  j["macro"] = {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}};
  auto classes = nlohmann::ordered_json::array();
  for (const auto& s : r.per_class) {
    classes.push_back({{"class", s.name},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support}});
  }
  j["classes"] = classes;
  auto matrix = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.matrix.size(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.matrix.size(); ++k) row.push_back(r.matrix.at(i, k));
    matrix.push_back(row);
  }
  j["confusion"] = matrix;
  return j.dump(2) + "\n";
}

}  // namespace

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::table: return render_table(report);
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::machine: return render_machine(report);
  }
  return render_table(report);
}

std::vector<ClassScores> parse_report_csv(std::string_view csv) {
  std::vector<ClassScores> rows;
  bool header = true;
  for (auto line : text::split(csv, '\n')) {
    line = text::trim(line);
    if (line.empty()) continue;
    if (header) {
      if (line != "class,precision,recall,f1,support") throw DataError("unexpected report CSV header");
      header = false;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) throw DataError("malformed report CSV row: " + std::string(line));
    auto p = text::to_double(fields[1]), r = text::to_double(fields[2]), f = text::to_double(fields[3]);
    auto support = text::to_int(fields[4]);
    if (!p || !r || !f || !support || *support < 0) {
      throw DataError("malformed report CSV row: " + std::string(line));
    }
    rows.push_back(ClassScores{fields[0], *p, *r, *f, static_cast<std::size_t>(*support)});
  }
  return rows;
}

}  // namespace nids
