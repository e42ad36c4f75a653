#include "nids/commands.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <memory>

#include "nids/error.hpp"
#include "nids/ingest.hpp"
#include "nids/model.hpp"
#include "nids/parallel.hpp"
#include "nids/preprocess.hpp"
#include "nids/synthgen.hpp"
#include "nids/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace nids {

namespace {

// Runs one pipeline stage, prefixing any toolkit error with the stage name
// while keeping its type.
template <typename F>
auto stage(std::string_view name, F&& body) -> decltype(body()) {
  const auto label = [&](const Error& e) { return std::string(name) + ": " + e.what(); };
  try {
    return body();
  } catch (const CapacityError& e) {
    throw CapacityError(label(e));
  } catch (const ConfigError& e) {
    throw ConfigError(label(e));
  } catch (const DataError& e) {
    throw DataError(label(e));
  } catch (const ModelError& e) {
    throw ModelError(label(e));
  } catch (const Error& e) {
    throw Error(e.category(), label(e));
  }
}

std::string wall_clock_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  return fmt::format("{}.{:03}Z", buf, ms);
}

void write_text(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw DataError("cannot write " + path.string());
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

KeyValueConfig load_config(const RunOptions& o) {
  KeyValueConfig kv;
  if (o.config_path) kv = KeyValueConfig::load(*o.config_path);
  if (o.seed) {
    const auto s = std::to_string(*o.seed);
    kv.set("seed", s);
    // an explicit flag also beats the per-stage seeds of the file
    for (const char* key : {"split_seed", "forest.seed"}) {
      if (kv.contains(key)) kv.set(key, s);
    }
  }
  if (o.model) kv.set("model", *o.model);
  if (o.target) kv.set("target", *o.target);
  if (o.memory_budget_mb) kv.set("memory_budget_mb", std::to_string(*o.memory_budget_mb));
  if (o.threads) kv.set("threads", std::to_string(*o.threads));
  return kv;
}

const std::vector<std::string> experiment_keys{
    "seed", "model", "target", "split_ratio", "split_mode", "split_seed", "fit_scope",
    "window_start", "window_end", "memory_budget_mb", "threads",
    "forest.n_estimators", "forest.min_samples_split", "forest.min_samples_leaf",
    "forest.max_features", "forest.min_impurity_decrease", "forest.class_weight", "forest.seed",
    "knn.k", "knn.leaf_size", "knn.p", "knn.weights"};

struct ExperimentConfig {
  PipelineConfig pipeline;
  ForestConfig forest;
  KnnConfig knn;
  ModelKind model = ModelKind::forest;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<std::size_t> memory_budget_mb;

  TrainOptions train_options() const {
    TrainOptions t;
    t.forest = forest;
    t.knn = knn;
    t.threads = threads;
    if (memory_budget_mb) t.max_rows = knn_rows_for_budget(*memory_budget_mb);
    return t;
  }
};

ExperimentConfig experiment_config(const KeyValueConfig& kv) {
  kv.require_known(experiment_keys);
  ExperimentConfig c;
  c.pipeline = PipelineConfig::from(kv);
  c.pipeline.check();
  c.forest = ForestConfig::from(kv);
  c.knn = KnnConfig::from(kv);
  if (auto m = kv.get("model")) {
    auto kind = parse_model_kind(*m);
    if (!kind) throw ConfigError("unknown model '" + *m + "' (expected random_forest or knn)");
    c.model = *kind;
  }
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  const auto threads = kv.get_int("threads", static_cast<std::int64_t>(default_threads()));
  if (threads < 1) throw ConfigError("threads must be at least 1");
  c.threads = static_cast<std::size_t>(threads);
  if (kv.contains("memory_budget_mb")) {
    const auto mb = kv.get_int("memory_budget_mb", 0);
    if (mb < 1) throw ConfigError("memory_budget_mb must be at least 1");
    c.memory_budget_mb = static_cast<std::size_t>(mb);
  }
  return c;
}

std::string_view to_string(SplitMode m) {
  return m == SplitMode::chronological ? "chronological" : "shuffled";
}

std::string_view to_string(FitScope s) {
  return s == FitScope::whole_sample ? "whole_sample" : "train_only";
}

// Every setting as resolved, defaults included.
json snapshot(const ExperimentConfig& c, bool with_model) {
  json j;
  j["seed"] = c.seed;
  if (with_model) j["model"] = std::string(to_string(c.model));
  j["target"] = std::string(to_string(c.pipeline.target_scheme));
  j["split_ratio"] = c.pipeline.split_ratio;
  j["split_mode"] = std::string(to_string(c.pipeline.split_mode));
  j["split_seed"] = c.pipeline.split_seed;
  j["fit_scope"] = std::string(to_string(c.pipeline.fit_scope));
  if (c.pipeline.sample_window) {
    j["window_start"] = format_timestamp(c.pipeline.sample_window->first);
    j["window_end"] = format_timestamp(c.pipeline.sample_window->second);
  }
  j["forest.n_estimators"] = c.forest.n_estimators;
  j["forest.min_samples_split"] = c.forest.min_samples_split;
  j["forest.min_samples_leaf"] = c.forest.min_samples_leaf;
  j["forest.max_features"] = c.forest.max_features == MaxFeatures::sqrt ? "sqrt" : "all";
  j["forest.min_impurity_decrease"] = c.forest.min_impurity_decrease;
  j["forest.class_weight"] = c.forest.class_weight == ClassWeighting::balanced ? "balanced" : "uniform";
  j["forest.seed"] = c.forest.seed;
  j["knn.k"] = c.knn.k;
  j["knn.leaf_size"] = c.knn.leaf_size;
  j["knn.p"] = c.knn.p;
  j["knn.weights"] = "uniform";
  j["threads"] = c.threads;
  if (c.memory_budget_mb) j["memory_budget_mb"] = *c.memory_budget_mb;
  return j;
}

json snapshot(const ScenarioConfig& c) {
  const auto kv = c.to_config();
  json j;
  for (const auto& [key, value] : kv.values()) j[key] = value;
  j["schedule"] = kv.block("schedule");
  return j;
}

class Manifest {
public:
  Manifest(std::string command, const RunOptions& o)
      : command_(std::move(command)), options_(o), started_(wall_clock_now()) {}

  void input(const fs::path& p) { inputs_.push_back(digest_file(p)); }
  void config(json j, std::uint64_t seed) {
    config_ = std::move(j);
    seed_ = seed;
  }

  fs::path write(RunResult& result) const {
    json j;
    j["command"] = command_;
    j["arguments"] = options_.arguments;
    j["version"] = toolkit_version;
    j["seed"] = seed_;
    j["config"] = config_;
    auto inputs = json::array();
    for (const auto& d : inputs_) inputs.push_back({{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}});
    j["inputs"] = inputs;
    auto outputs = json::array();
    for (const auto& p : result.outputs) {
      const auto d = digest_file(p);
      outputs.push_back({{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}});
    }
    j["outputs"] = outputs;
    j["started_at"] = started_;
    j["finished_at"] = wall_clock_now();
    const auto path = options_.out_dir / "manifest.json";
    write_text(path, j.dump(2) + "\n");
    result.outputs.push_back(path);
    return path;
  }

private:
  std::string command_;
  const RunOptions& options_;
  std::string started_;
  json config_ = json::object();
  std::uint64_t seed_ = 0;
  std::vector<FileDigest> inputs_;
};

std::vector<RawFlow> ingest(const fs::path& data, const RunOptions& o, IngestReport& report) {
  return stage("ingest", [&] {
    if (!fs::exists(data)) throw DataError("no such file: " + data.string());
    return read_flows(data, IngestOptions{o.strict_ingest}, &report);
  });
}

void require_labels(const IngestReport& r, TargetScheme scheme) {
  if (scheme == TargetScheme::attack_type && !r.has_attack_type) {
    throw DataError("missing label column 'attackType' required by target " +
                    std::string(to_string(scheme)));
  }
  if (scheme != TargetScheme::attack_type && !r.has_class) {
    throw DataError("missing label column 'class' required by target " +
                    std::string(to_string(scheme)));
  }
}

std::vector<RawFlow> sorted_window(std::vector<RawFlow> flows, const PipelineConfig& p) {
  std::stable_sort(flows.begin(), flows.end(), [](const RawFlow& a, const RawFlow& b) {
    return a.date_first_seen < b.date_first_seen;
  });
  if (p.sample_window) flows = sample_window(flows, p.sample_window->first, p.sample_window->second);
  return flows;
}

EvaluationReport score(const TrainedModel& model, const Dataset& data, std::size_t threads,
                       std::uint64_t seed) {
  const auto predicted = model.predict_all(data.rows, threads);
  auto report = evaluate(data.targets, predicted, model.classes, class_display_names(model.scheme));
  report.model_kind = std::string(to_string(model.kind));
  report.target_scheme = std::string(to_string(model.scheme));
  report.seed = model.kind == ModelKind::forest ? std::get<RandomForest>(model.engine).config().seed : seed;
  if (!data.timestamps.empty()) {
    const auto [lo, hi] = std::minmax_element(data.timestamps.begin(), data.timestamps.end());
    report.data_first_seen = format_timestamp(*lo);
    report.data_last_seen = format_timestamp(*hi);
  }
  return report;
}

void write_report(const EvaluationReport& report, const fs::path& stem, RunResult& result) {
  for (auto f : {ReportFormat::table, ReportFormat::csv, ReportFormat::machine}) {
    auto path = stem;
    path += "." + std::string(file_extension(f));
    write_text(path, render_report(report, f));
    result.outputs.push_back(path);
  }
}

std::string comparison_table(const std::vector<EvaluationReport>& reports) {
  std::string out = "Macro averages on the held-out split\n";
  out += fmt::format("{:<14} {:<13} {:>9} {:>9} {:>9} {:>9}\n", "Model", "Target", "Precision",
                     "Recall", "F1-Score", "Accuracy");
  for (const auto& r : reports) {
    out += fmt::format("{:<14} {:<13} {:>9.4f} {:>9.4f} {:>9.4f} {:>9.4f}\n", r.model_kind,
                       r.target_scheme, r.macro.precision, r.macro.recall, r.macro.f1, r.accuracy);
  }
  // Per-class rows side by side, one block per target.
  for (const auto* target : {"class_binary", "attack_type"}) {
    std::vector<const EvaluationReport*> arms;
    for (const auto& r : reports) {
      if (r.target_scheme == target) arms.push_back(&r);
    }
    if (arms.empty()) continue;
    std::vector<std::string> names;
    for (const auto* r : arms) {
      for (const auto& s : r->per_class) {
        if (std::find(names.begin(), names.end(), s.name) == names.end()) names.push_back(s.name);
      }
    }
    std::size_t width = 11;
    for (const auto& n : names) width = std::max(width, n.size());
    out += fmt::format("\nPer-class scores, target {}\n{:<{}}", target, "Class", width);
    for (const auto* r : arms) {
      out += fmt::format("  {:>22}", r->model_kind + " P/R/F1");
    }
    out += "\n";
    for (const auto& n : names) {
      out += fmt::format("{:<{}}", n, width);
      for (const auto* r : arms) {
        auto it = std::find_if(r->per_class.begin(), r->per_class.end(),
                               [&](const ClassScores& s) { return s.name == n; });
        if (it == r->per_class.end()) {
          out += fmt::format("  {:>22}", "-");
        } else {
          out += fmt::format("  {:>6.4f} {:>6.4f} {:>6.4f}", it->precision, it->recall, it->f1);
        }
      }
      out += "\n";
    }
  }
  return out;
}

std::string comparison_csv(const std::vector<EvaluationReport>& reports) {
  std::string out = "model,target,class,precision,recall,f1,support\n";
  for (const auto& r : reports) {
    for (const auto& s : r.per_class) {
      out += fmt::format("{},{},{},{:.4f},{:.4f},{:.4f},{}\n", r.model_kind, r.target_scheme,
                         s.name, s.precision, s.recall, s.f1, s.support);
    }
    out += fmt::format("{},{},macro_avg,{:.4f},{:.4f},{:.4f},{}\n", r.model_kind, r.target_scheme,
                       r.macro.precision, r.macro.recall, r.macro.f1, r.matrix.total());
  }
  return out;
}

}  // namespace

FileDigest digest_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCategory::internal, "SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  std::uintmax_t total = 0;
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
      total += static_cast<std::uintmax_t>(got);
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return FileDigest{path.string(), hex, total};
}

std::size_t knn_rows_for_budget(std::size_t budget_mb) noexcept {
  constexpr std::size_t row_bytes = sizeof(FeatureVector) + sizeof(int) + sizeof(std::size_t);
  return budget_mb * 1024 * 1024 / row_bytes;
}

RunResult cmd_generate(const RunOptions& o) {
  Manifest manifest("generate", o);
  RunResult result;
  const auto cfg = stage("config", [&] {
    auto kv = o.config_path ? KeyValueConfig::load(*o.config_path) : KeyValueConfig{};
    if (o.config_path) manifest.input(*o.config_path);
    if (o.seed) kv.set("seed", std::to_string(*o.seed));
    return ScenarioConfig::from(kv);
  });
  manifest.config(snapshot(cfg), cfg.seed);
  stage("output", [&] { ensure_out_dir(o.out_dir); });

  const auto scenario = stage("generate", [&] { return generate(cfg); });

  stage("output", [&] {
    const auto flows = o.out_dir / "flows.csv";
    {
      std::ofstream out(flows, std::ios::binary);
      write_flows(out, scenario.flows);
      if (!out) throw DataError("cannot write " + flows.string());
    }
    result.outputs.push_back(flows);
    const auto truth = o.out_dir / "ground_truth.csv";
    {
      std::ofstream out(truth, std::ios::binary);
      write_ground_truth(out, scenario.truth);
      if (!out) throw DataError("cannot write " + truth.string());
    }
    result.outputs.push_back(truth);
    const auto conf = o.out_dir / "scenario.conf";
    write_text(conf, cfg.to_config().render());
    result.outputs.push_back(conf);
    manifest.write(result);
  });

  std::array<std::size_t, all_attack_types.size()> per_type{};
  for (const auto& t : scenario.truth) ++per_type[static_cast<std::size_t>(t.attack_type)];
  result.summary = fmt::format("generated {} flows into {}\n", scenario.flows.size(), o.out_dir.string());
  for (auto type : all_attack_types) {
    result.summary += fmt::format("  {:<12} {}\n", display_name(type), per_type[static_cast<std::size_t>(type)]);
  }
  return result;
}

RunResult cmd_train(const fs::path& data, const RunOptions& o) {
  Manifest manifest("train", o);
  RunResult result;
  const auto cfg = stage("config", [&] {
    if (o.config_path) manifest.input(*o.config_path);
    return experiment_config(load_config(o));
  });
  manifest.config(snapshot(cfg, true), cfg.seed);
  stage("output", [&] { ensure_out_dir(o.out_dir); });

  IngestReport ingest_report;
  auto flows = ingest(data, o, ingest_report);
  manifest.input(data);

  const auto scheme = cfg.pipeline.target_scheme;
  auto sorted = stage("preprocess", [&] {
    require_labels(ingest_report, scheme);
    return sorted_window(std::move(flows), cfg.pipeline);
  });
  const auto sample = stage("preprocess", [&] { return prepare(sorted, cfg.pipeline); });
  const auto train = sample.train(scheme);
  const auto test = sample.test(scheme);

  const auto model = stage("fit", [&] { return train_model(train, cfg.model, cfg.train_options()); });
  const auto report = stage("evaluate", [&] { return score(model, test, cfg.threads, cfg.seed); });

  stage("output", [&] {
    const auto model_path = o.out_dir / "model.bin";
    save_model(model, model_path);
    result.outputs.push_back(model_path);
    std::vector<RawFlow> held_out;
    held_out.reserve(sample.split.test.size());
    for (auto i : sample.split.test) held_out.push_back(sorted[i]);
    const auto split_path = o.out_dir / "test_split.csv";
    {
      std::ofstream out(split_path, std::ios::binary);
      write_flows(out, held_out);
      if (!out) throw DataError("cannot write " + split_path.string());
    }
    result.outputs.push_back(split_path);
    write_report(report, o.out_dir / "report", result);
    manifest.write(result);
  });

  result.summary = fmt::format("trained {} on {} rows ({} held out, {} rejected at ingest)\n",
                               to_string(model.kind), train.size(), test.size(),
                               ingest_report.rows_rejected) +
                   render_report(report, o.format);
  return result;
}

RunResult cmd_evaluate(const fs::path& model_path, const fs::path& data, const RunOptions& o) {
  Manifest manifest("evaluate", o);
  RunResult result;
  std::size_t threads = o.threads.value_or(default_threads());
  if (threads < 1) throw ConfigError("config: threads must be at least 1");

  const auto model = stage("model", [&] {
    if (!fs::exists(model_path)) throw ModelError("no such model file: " + model_path.string());
    return load_model(model_path);
  });
  manifest.input(model_path);
  stage("model", [&] {
    if (o.target) {
      const auto requested = parse_target_scheme(*o.target);
      if (!requested) throw ConfigError("unknown target scheme '" + *o.target + "'");
      if (*requested != model.scheme) {
        throw ModelError("scheme mismatch: model predicts " + std::string(to_string(model.scheme)) +
                         " but evaluation asked for " + std::string(to_string(*requested)));
      }
    }
  });
  // An experiment config, when given, supplies the run seed and thread count.
  const auto seed = stage("config", [&] {
    if (!o.config_path) return o.seed.value_or(0);
    const auto c = experiment_config(load_config(o));
    threads = c.threads;
    return c.seed;
  });
  if (o.config_path) manifest.input(*o.config_path);
  json cfg;
  cfg["model"] = std::string(to_string(model.kind));
  cfg["target"] = std::string(to_string(model.scheme));
  cfg["threads"] = threads;
  manifest.config(cfg, seed);
  stage("output", [&] { ensure_out_dir(o.out_dir); });

  IngestReport ingest_report;
  const auto flows = ingest(data, o, ingest_report);
  manifest.input(data);
  const auto dataset = stage("preprocess", [&] {
    if (flows.empty()) throw DataError("empty test file: no flows in " + data.string());
    try {
      require_labels(ingest_report, model.scheme);
    } catch (const DataError& e) {
      throw DataError(std::string("scheme mismatch: ") + e.what());
    }
    return apply_pipeline(flows, model.scheme, model.encoder, model.scaler);
  });
  const auto report = stage("evaluate", [&] { return score(model, dataset, threads, seed); });

  stage("output", [&] {
    write_report(report, o.out_dir / "report", result);
    manifest.write(result);
  });
  result.summary = render_report(report, o.format);
  return result;
}

RunResult cmd_compare_labels(const fs::path& data, const RunOptions& o) {
  Manifest manifest("compare-labels", o);
  RunResult result;
  const auto cfg = stage("config", [&] {
    if (o.config_path) manifest.input(*o.config_path);
    return experiment_config(load_config(o));
  });
  auto snap = snapshot(cfg, false);
  snap.erase("target");
  manifest.config(snap, cfg.seed);
  stage("output", [&] { ensure_out_dir(o.out_dir); });

  IngestReport ingest_report;
  auto flows = ingest(data, o, ingest_report);
  manifest.input(data);
  const auto sample = stage("preprocess", [&] {
    require_labels(ingest_report, TargetScheme::class_binary);
    require_labels(ingest_report, TargetScheme::attack_type);
    return prepare(std::move(flows), cfg.pipeline);
  });

  std::vector<EvaluationReport> reports;
  for (auto kind : {ModelKind::forest, ModelKind::knn}) {
    for (auto scheme : {TargetScheme::class_binary, TargetScheme::attack_type}) {
      const auto arm = fmt::format("{}/{}", to_string(kind), to_string(scheme));
      const auto train = sample.train(scheme);
      const auto model = stage("fit " + arm, [&] { return train_model(train, kind, cfg.train_options()); });
      const auto test = sample.test(scheme);
      reports.push_back(stage("evaluate " + arm, [&] { return score(model, test, cfg.threads, cfg.seed); }));
    }
  }

  const auto table = comparison_table(reports);
  stage("output", [&] {
    for (const auto& r : reports) {
      write_report(r, o.out_dir / fmt::format("report_{}_{}", r.model_kind, r.target_scheme), result);
    }
    write_text(o.out_dir / "comparison.txt", table);
    result.outputs.push_back(o.out_dir / "comparison.txt");
    write_text(o.out_dir / "comparison.csv", comparison_csv(reports));
    result.outputs.push_back(o.out_dir / "comparison.csv");
    manifest.write(result);
  });

  if (o.format == ReportFormat::table) {
    result.summary = table;
  } else if (o.format == ReportFormat::csv) {
    result.summary = comparison_csv(reports);
  } else {
    json j = json::array();
    for (const auto& r : reports) j.push_back(json::parse(render_report(r, ReportFormat::machine)));
    result.summary = j.dump(2) + "\n";
  }
  return result;
}

}  // namespace nids
