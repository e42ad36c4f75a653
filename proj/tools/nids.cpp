#include <CLI11.hpp>

#include <iostream>

#include "nids/commands.hpp"
#include "nids/error.hpp"

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out = ".";
  std::string format = "table";
  bool strict_ingest = false;
  std::size_t memory_budget_mb = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "seed overriding the config file");
  cmd->add_option("--threads", f.threads, "worker threads (default: available cores)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--format", f.format, "report printed to stdout")
      ->check(CLI::IsMember({"table", "csv", "machine"}))
      ->capture_default_str();
  cmd->add_flag("--strict-ingest", f.strict_ingest, "fail on the first malformed row");
  cmd->add_option("--memory-budget-mb", f.memory_budget_mb,
                  "row budget for KNN fitting, in MiB")
      ->check(CLI::PositiveNumber);
}

nids::RunOptions resolve(const CLI::App* cmd, const Flags& f, int argc, char** argv) {
  nids::RunOptions o;
  if (!f.config.empty()) o.config_path = f.config;
  if (cmd->count("--seed")) o.seed = f.seed;
  if (cmd->count("--threads")) o.threads = f.threads;
  if (cmd->count("--memory-budget-mb")) o.memory_budget_mb = f.memory_budget_mb;
  o.out_dir = f.out;
  o.format = *nids::parse_report_format(f.format);
  o.strict_ingest = f.strict_ingest;
  for (int i = 1; i < argc; ++i) o.arguments.emplace_back(argv[i]);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-based intrusion detection experiments"};
  app.set_version_flag("--version", nids::toolkit_version);
  app.require_subcommand(1);

  Flags flags;
  std::string data, model_path, model_kind, target;

  auto* gen = app.add_subcommand("generate", "write a labelled synthetic flow scenario");
  add_common(gen, flags);

  auto* train = app.add_subcommand("train", "fit a model on a flow file");
  add_common(train, flags);
  train->add_option("data", data, "flow CSV")->required();
  train->add_option("--model", model_kind, "random_forest or knn");
  train->add_option("--target", target, "class, class_binary or attack_type");

  auto* eval = app.add_subcommand("evaluate", "score a saved model on a flow file");
  add_common(eval, flags);
  eval->add_option("model", model_path, "model file")->required();
  eval->add_option("data", data, "flow CSV")->required();
  eval->add_option("--target", target, "refuse models trained for another target");

  auto* compare = app.add_subcommand("compare-labels",
                                     "both models on both label schemes, one shared split");
  add_common(compare, flags);
  compare->add_option("data", data, "flow CSV with class and attackType columns")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nids::exit_code(nids::ErrorCategory::config);
  }

  try {
    nids::RunResult result;
    if (*gen) {
      result = nids::cmd_generate(resolve(gen, flags, argc, argv));
    } else if (*train) {
      auto o = resolve(train, flags, argc, argv);
      if (train->count("--model")) o.model = model_kind;
      if (train->count("--target")) o.target = target;
      result = nids::cmd_train(data, o);
    } else if (*eval) {
      auto o = resolve(eval, flags, argc, argv);
      if (eval->count("--target")) o.target = target;
      result = nids::cmd_evaluate(model_path, data, o);
    } else {
      result = nids::cmd_compare_labels(data, resolve(compare, flags, argc, argv));
    }
    std::cout << result.summary;
    return 0;
  } catch (const nids::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nids::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return nids::exit_code(nids::ErrorCategory::internal);
  }
}
