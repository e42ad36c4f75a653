#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "nids/commands.hpp"
#include "nids/error.hpp"
#include "nids/ingest.hpp"
#include "nids/model.hpp"
#include "support.hpp"

using namespace nids;
namespace fs = std::filesystem;

namespace {

const char* scenario_text =
    "seed = 3\n"
    "start = 2017-03-15 00:00:00.000\n"
    "duration = 8h\n"
    "total_flows = 6000\n"
    "attack_fraction = 0.2\n"
    "[schedule]\n"
    "ping_scan 30m 10m attacker1 192.168.220.0/24 60\n"
    "port_scan 1h 20m attacker1 192.168.100.5 300\n"
    "dos 2h 10m attacker2 192.168.100.5 400\n"
    "brute_force 3h 30m attacker3 192.168.100.4 150\n"
    "ping_scan 6h 10m attacker1 192.168.220.0/24 60\n"
    "port_scan 6h30m 10m attacker1 192.168.100.5 300\n"
    "dos 7h 10m attacker2 192.168.100.5 400\n"
    "brute_force 7h20m 30m attacker3 192.168.100.4 150\n";

fs::path write_conf(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

// Generates the small scenario once per directory.
fs::path generated_flows(const fs::path& dir) {
  RunOptions o;
  o.config_path = write_conf(dir, "scenario.in.conf", scenario_text);
  o.out_dir = dir / "gen";
  cmd_generate(o);
  return dir / "gen" / "flows.csv";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(NIDS_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(testing::read_file(dir / "manifest.json")); }

}  // namespace

TEST_CASE("digest_file computes sha256") {
  const auto dir = testing::scratch_dir("digest");
  std::ofstream(dir / "abc.txt") << "abc";
  const auto d = digest_file(dir / "abc.txt");
  CHECK(d.sha256 == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(d.bytes == 3);
}

TEST_CASE("knn budget rows") {
  const auto per_row = sizeof(FeatureVector) + sizeof(int) + sizeof(std::size_t);
  CHECK(knn_rows_for_budget(1) == (1u << 20) / per_row);
  CHECK(knn_rows_for_budget(0) == 0);
}

TEST_CASE("generate writes flows, truth, config and a manifest") {
  const auto dir = testing::scratch_dir("cmd_generate");
  const auto flows = generated_flows(dir);
  const auto gen = dir / "gen";
  for (const char* name : {"flows.csv", "ground_truth.csv", "scenario.conf", "manifest.json"}) {
    CHECK(fs::exists(gen / name));
  }
  CHECK(read_flows(flows).size() == 6000);
  const auto m = manifest(gen);
  CHECK(m["command"] == "generate");
  CHECK(m["version"] == toolkit_version);
  CHECK(m["seed"] == 3);
  CHECK(m["outputs"].size() == 3);
  CHECK(m["outputs"][0]["sha256"] == digest_file(flows).sha256);

  // the written scenario.conf reproduces the run
  RunOptions again;
  again.config_path = gen / "scenario.conf";
  again.out_dir = dir / "regen";
  cmd_generate(again);
  CHECK(testing::read_file(dir / "regen" / "flows.csv") == testing::read_file(flows));
}

TEST_CASE("train then evaluate reproduces the held-out report") {
  const auto dir = testing::scratch_dir("cmd_train");
  const auto flows = generated_flows(dir);
  const auto exp = write_conf(dir, "exp.conf", "seed = 4\nforest.n_estimators = 5\n");
  for (const char* kind : {"random_forest", "knn"}) {
    RunOptions t;
    t.config_path = exp;
    t.out_dir = dir / kind / "train";
    t.model = kind;
    t.format = ReportFormat::csv;
    const auto trained = cmd_train(flows, t);
    CHECK(fs::exists(t.out_dir / "model.bin"));
    CHECK(fs::exists(t.out_dir / "test_split.csv"));
    CHECK(trained.outputs.back().filename() == "manifest.json");

    RunOptions e;
    e.config_path = exp;
    e.out_dir = dir / kind / "eval";
    e.format = ReportFormat::csv;
    cmd_evaluate(t.out_dir / "model.bin", t.out_dir / "test_split.csv", e);
    CHECK(testing::read_file(e.out_dir / "report.csv") == testing::read_file(t.out_dir / "report.csv"));
    CHECK(testing::read_file(e.out_dir / "report.json") == testing::read_file(t.out_dir / "report.json"));
    CHECK(manifest(e.out_dir)["inputs"].size() == 3);  // model, data, config
  }
}

TEST_CASE("training is deterministic across runs and thread counts") {
  const auto dir = testing::scratch_dir("cmd_determinism");
  const auto flows = generated_flows(dir);
  std::string first;
  for (std::size_t threads : {1u, 3u}) {
    RunOptions t;
    t.out_dir = dir / ("t" + std::to_string(threads));
    t.threads = threads;
    t.seed = 11;
    cmd_train(flows, t);
    const auto bytes = testing::read_file(t.out_dir / "model.bin");
    if (first.empty()) {
      first = bytes;
    } else {
      CHECK(bytes == first);
    }
    const auto m = manifest(t.out_dir);
    CHECK(m["seed"] == 11);
    CHECK(m["config"]["forest.seed"] == 11);
  }
}

TEST_CASE("evaluate rejects a target scheme the model was not trained for") {
  const auto dir = testing::scratch_dir("cmd_scheme");
  const auto flows = generated_flows(dir);
  RunOptions t;
  t.out_dir = dir / "train";
  t.target = "class_binary";
  t.config_path = write_conf(dir, "exp.conf", "forest.n_estimators = 3\n");
  cmd_train(flows, t);
  RunOptions e;
  e.out_dir = dir / "eval";
  e.target = "attack_type";
  try {
    cmd_evaluate(t.out_dir / "model.bin", flows, e);
    FAIL("expected a model error");
  } catch (const Error& err) {
    CHECK(err.category() == ErrorCategory::model);
    CHECK(std::string(err.what()).find("scheme mismatch") != std::string::npos);
  }
}

TEST_CASE("errors carry the failing stage") {
  const auto dir = testing::scratch_dir("cmd_stages");
  const auto flows = generated_flows(dir);
  RunOptions t;
  t.out_dir = dir / "knn";
  t.model = "knn";
  t.config_path = write_conf(dir, "exp.conf", "knn.k = 100000\n");
  try {
    cmd_train(flows, t);
    FAIL("expected a model error");
  } catch (const Error& err) {
    CHECK(err.category() == ErrorCategory::model);
    CHECK(std::string(err.what()).rfind("fit: ", 0) == 0);
  }
  RunOptions missing;
  missing.out_dir = dir / "missing";
  try {
    cmd_train(dir / "nope.csv", missing);
    FAIL("expected a data error");
  } catch (const Error& err) {
    CHECK(err.category() == ErrorCategory::data);
    CHECK(std::string(err.what()).rfind("ingest: ", 0) == 0);
  }
  RunOptions bad_key;
  bad_key.out_dir = dir / "bad";
  bad_key.config_path = write_conf(dir, "bad.conf", "forest.depth = 3\n");
  try {
    cmd_train(flows, bad_key);
    FAIL("expected a config error");
  } catch (const Error& err) {
    CHECK(err.category() == ErrorCategory::config);
    CHECK(std::string(err.what()).find("forest.depth") != std::string::npos);
  }
  RunOptions zero;
  zero.out_dir = dir / "zero";
  zero.memory_budget_mb = 0;
  CHECK_THROWS_AS(cmd_train(flows, zero), ConfigError);

  // 20000 flows leave 14000 training rows, more than one MiB holds
  RunOptions big;
  big.config_path = write_conf(dir, "big.conf", "total_flows = 20000\nduration = 8h\nattack_fraction = none\n[schedule]\n");
  big.out_dir = dir / "big";
  cmd_generate(big);
  RunOptions budget;
  budget.out_dir = dir / "budget";
  budget.model = "knn";
  budget.memory_budget_mb = 1;
  try {
    cmd_train(dir / "big" / "flows.csv", budget);
    FAIL("expected a capacity error");
  } catch (const Error& err) {
    CHECK(err.category() == ErrorCategory::model);
    CHECK(std::string(err.what()).find("memory budget") != std::string::npos);
  }
}

TEST_CASE("compare-labels writes every report and the comparison") {
  const auto dir = testing::scratch_dir("cmd_compare");
  const auto flows = generated_flows(dir);
  RunOptions o;
  o.out_dir = dir / "cmp";
  o.config_path = write_conf(dir, "exp.conf", "forest.n_estimators = 5\n");
  o.format = ReportFormat::csv;
  const auto r = cmd_compare_labels(flows, o);
  for (const char* kind : {"random_forest", "knn"}) {
    for (const char* scheme : {"class_binary", "attack_type"}) {
      CHECK(fs::exists(o.out_dir / (std::string("report_") + kind + "_" + scheme + ".csv")));
    }
  }
  CHECK(fs::exists(o.out_dir / "comparison.txt"));
  const auto csv = testing::read_file(o.out_dir / "comparison.csv");
  CHECK(csv.rfind("model,target,class,precision,recall,f1,support\n", 0) == 0);
  CHECK(r.summary == csv);
}

TEST_CASE("the command-line tool maps failures to exit codes") {
  const auto dir = testing::scratch_dir("cli");
  const auto log = dir / "log.txt";
  CHECK(run_cli("--version", log) == 0);
  CHECK(testing::read_file(log).find(toolkit_version) != std::string::npos);
  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("frobnicate", log) == 2);
  CHECK(run_cli("train", log) == 2);

  write_conf(dir, "scenario.conf", scenario_text);
  CHECK(run_cli("generate --config " + (dir / "scenario.conf").string() + " --out " + (dir / "gen").string(), log) == 0);
  const auto flows = (dir / "gen" / "flows.csv").string();

  write_conf(dir, "bad_schedule.conf",
             "duration = 2h\ntotal_flows = 100\n[schedule]\ndos 1h 3h attacker1 192.168.100.5 5\n");
  CHECK(run_cli("generate --config " + (dir / "bad_schedule.conf").string() + " --out " + (dir / "bad").string(),
                log) == 2);
  CHECK(testing::read_file(log).find("schedule entry 1") != std::string::npos);

  CHECK(run_cli("train " + (dir / "absent.csv").string() + " --out " + (dir / "t").string(), log) == 3);
  std::ofstream(dir / "empty.csv") << "";
  CHECK(run_cli("train " + (dir / "empty.csv").string() + " --out " + (dir / "t").string(), log) == 3);
  CHECK(run_cli("train " + flows + " --model svm --out " + (dir / "t").string(), log) == 2);

  write_conf(dir, "tiny.conf", "forest.n_estimators = 3\n");
  CHECK(run_cli("train " + flows + " --config " + (dir / "tiny.conf").string() + " --target class_binary --out " +
                    (dir / "t").string(),
                log) == 0);
  CHECK(run_cli("evaluate " + (dir / "t" / "model.bin").string() + " " + flows + " --target attack_type --out " +
                    (dir / "e").string(),
                log) == 4);
  std::ofstream(dir / "garbage.bin") << "NIDSMODL garbage";
  CHECK(run_cli("evaluate " + (dir / "garbage.bin").string() + " " + flows + " --out " + (dir / "e").string(), log) ==
        4);
  CHECK(run_cli("train " + flows + " --model knn --memory-budget-mb 0 --out " + (dir / "k").string(), log) == 2);
  write_conf(dir, "huge_k.conf", "knn.k = 100000\n");
  CHECK(run_cli("train " + flows + " --model knn --config " + (dir / "huge_k.conf").string() + " --out " +
                    (dir / "k").string(),
                log) == 4);
  CHECK(testing::read_file(log).find("fit: knn.k") != std::string::npos);
  CHECK(run_cli("evaluate " + (dir / "t" / "model.bin").string() + " " + flows + " --format machine --out " +
                    (dir / "e").string(),
                log) == 0);
  CHECK(nlohmann::json::parse(testing::read_file(log))["target_scheme"] == "class_binary");
}
