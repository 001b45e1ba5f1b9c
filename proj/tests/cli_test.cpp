#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "gtest/gtest.h"
#include <unistd.h>

namespace fraudx::cli {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fraudx_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const Json& json, const std::string& name = "config.json") {
    const auto path = dir_ / name;
    write_text(path, dump(json));
    return path;
  }

  CliRun run(std::vector<std::string> args) {
    std::vector<const char*> argv = {"fraudx"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
  }

  // Small models and budgets so the whole pipeline runs in seconds.
  static Json quick_config() {
    return Json::parse(R"({
      "seed": 11,
      "out": "run",
      "dataset": {"synthetic": {"n_rows": 2000, "n_numeric": 7, "n_categorical": 3, "fraud_rate": 0.08}},
      "models": ["NaiveBayes", "LogisticRegression", "DecisionTree",
                 {"kind": "RandomForest", "params": {"n_estimators": 8, "max_depth": 6}},
                 {"kind": "GradientBoosting", "params": {"n_estimators": 8, "max_depth": 3, "learning_rate": 0.1}},
                 {"kind": "NeuralNetwork", "params": {"hidden": [8], "epochs": 2}},
                 {"kind": "Autoencoder", "params": {"hidden": [8], "epochs": 2}},
                 {"kind": "IsolationForest", "params": {"n_estimators": 20}}],
      "explainer": {"n_coalitions": 100, "n_perturbations": 300},
      "backgrounds": {"explain": {"strategy": "subsample", "size": 30},
                      "normal": {"strategy": "normal_only", "size": 30},
                      "fraud": {"strategy": "fraud_only", "size": 30}},
      "study": {"timing_sizes": [10, 20, 100000], "tradeoff_draws": 2}
    })");
  }

  fs::path dir_;
};

TEST_F(Cli, ValidationListsEveryProblemAtOnce) {
  const auto config = write_config(Json::parse(R"({
    "dataset": {"csv": "missing.csv", "schema": "missing.schema"},
    "models": ["NaiveBayes", "Bogus"],
    "explainer": {"top_k": 0},
    "colour": "blue"
  })"));
  try {
    load_run_config(config, {});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    const auto mentions = [&](const std::string& needle) {
      return std::any_of(p.begin(), p.end(),
                         [&](const std::string& s) { return s.find(needle) != std::string::npos; });
    };
    EXPECT_TRUE(mentions("seed"));
    EXPECT_TRUE(mentions("out"));
    EXPECT_TRUE(mentions("missing.csv"));
    EXPECT_TRUE(mentions("missing.schema"));
    EXPECT_TRUE(mentions("Bogus"));
    EXPECT_TRUE(mentions("top_k"));
    EXPECT_TRUE(mentions("colour"));
  }
  const auto r = run({"--config", config.string(), "train"});
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("invalid configuration"), std::string::npos);
}

TEST_F(Cli, FlagsOverrideConfig) {
  auto json = quick_config();
  const auto path = write_config(json);
  const auto config = load_run_config(path, {std::uint64_t{99}, dir_ / "elsewhere"});
  EXPECT_EQ(config.seed, 99u);
  EXPECT_EQ(config.out, dir_ / "elsewhere");
  json.erase("seed");
  EXPECT_THROW(load_run_config(write_config(json, "noseed.json"), {}), ConfigError);
  EXPECT_NO_THROW(load_run_config(write_config(json, "noseed.json"), {std::uint64_t{1}, {}}));
}

TEST_F(Cli, DefaultModelsAreTheEightKinds) {
  auto json = quick_config();
  json.erase("models");
  const auto config = load_run_config(write_config(json), {});
  ASSERT_EQ(config.models.size(), 8u);
  EXPECT_EQ(config.models[4].id, "GradientBoosting");
  EXPECT_EQ(std::get<GradientBoostingParams>(config.models[4].spec.params).learning_rate, 0.002);
}

TEST_F(Cli, TrainIsDeterministicAndReportsEveryModel) {
  const auto config = write_config(quick_config());
  const auto first = run({"--config", config.string(), "train"});
  ASSERT_EQ(first.status, 0) << first.err;
  const auto models = dir_ / "run" / "models";
  std::vector<std::string> bytes;
  std::size_t n_files = 0;
  for (const auto& e : fs::directory_iterator(models)) {
    ++n_files;
    bytes.push_back(read_file(e.path()));
  }
  EXPECT_EQ(n_files, 8u);
  const auto table = Json::parse(read_file(dir_ / "run" / "train" / "table1.json"));
  EXPECT_EQ(table.size(), 8u);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "config.json"));

  const auto second = run({"--config", config.string(), "train"});
  ASSERT_EQ(second.status, 0);
  std::size_t i = 0;
  for (const auto& e : fs::directory_iterator(models)) EXPECT_EQ(read_file(e.path()), bytes[i++]);
  EXPECT_EQ(first.out, second.out);
}

TEST_F(Cli, ExplainAndStudy) {
  const auto config = write_config(quick_config());
  const auto c = config.string();

  const auto missing = run({"--config", c, "study", "--which", "agreement"});
  EXPECT_NE(missing.status, 0);
  EXPECT_NE(missing.err.find("NaiveBayes.model"), std::string::npos);
  EXPECT_NE(missing.err.find("IsolationForest.model"), std::string::npos);

  ASSERT_EQ(run({"--config", c, "train"}).status, 0);
  ASSERT_EQ(run({"--config", c, "evaluate"}).status, 0);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "evaluate" / "table1.csv"));

  // Exact Shapley on 10 features surfaces the local-accuracy identity.
  const auto exact = run({"--config", c, "explain", "--model", "GradientBoosting", "--method",
                          "exact_shapley", "--instance", "row-5"});
  ASSERT_EQ(exact.status, 0) << exact.err;
  const auto file = dir_ / "run" / "explanations" / "GradientBoosting__exact_shapley__row-5.json";
  const auto first = read_file(file);
  const auto json = Json::parse(first);
  double total = json["attribution"]["base_value"].get<double>();
  for (const auto& v : json["attribution"]["phi"]) total += v.get<double>();
  EXPECT_NEAR(total, json["attribution"]["predicted_value"].get<double>(), 1e-9);
  EXPECT_EQ(json["ranking"]["entries"].size(), 10u);

  ASSERT_EQ(run({"--config", c, "explain", "--model", "GradientBoosting", "--method",
                 "exact_shapley", "--instance", "row-5"}).status, 0);
  EXPECT_EQ(read_file(file), first);

  const auto lime_if = run({"--config", c, "explain", "--model", "IsolationForest", "--method", "lime"});
  EXPECT_NE(lime_if.status, 0);
  EXPECT_NE(lime_if.err.find("fraud probability"), std::string::npos);

  const auto unknown = run({"--config", c, "explain", "--model", "NaiveBayes", "--instance", "nope"});
  EXPECT_NE(unknown.status, 0);
  EXPECT_NE(unknown.err.find("nope"), std::string::npos);

  ASSERT_EQ(run({"--config", c, "study", "--which", "agreement"}).status, 0);
  const auto agreement = read_file(dir_ / "run" / "study" / "agreement" / "report.json");
  ASSERT_EQ(run({"--config", c, "study", "--which", "agreement"}).status, 0);
  EXPECT_EQ(read_file(dir_ / "run" / "study" / "agreement" / "report.json"), agreement);

  const auto all = run({"--config", c, "study", "--which", "all"});
  ASSERT_EQ(all.status, 0) << all.err;
  const auto report = Json::parse(read_file(dir_ / "run" / "study" / "all" / "report.json"));
  for (const auto* key : {"table1", "agreement", "sensitivity", "timing", "tradeoff"}) {
    EXPECT_FALSE(report[key].empty()) << key;
  }
  std::size_t skips = 0;
  for (const auto& r : report["timing"]) {
    if (r["skipped"].get<bool>() && r["explainer"] == "kernel_shap") {
      EXPECT_EQ(r["background_size"], 100000);
      ++skips;
    }
  }
  EXPECT_EQ(skips, 8u);
  EXPECT_EQ(report["timing"].size(), 8u * 4u);
  for (const auto* csv : {"table1.csv", "agreement.csv", "sensitivity.csv", "timing.csv", "tradeoff.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / "study" / "all" / csv)) << csv;
  }
}

TEST_F(Cli, SynthOutputLoadsAsCsvDataset) {
  auto json = quick_config();
  json["models"] = Json::array({"LogisticRegression"});
  const auto config = write_config(json);
  const auto r = run({"--config", config.string(), "synth"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto data = dir_ / "run" / "data";
  ASSERT_TRUE(fs::exists(data / "synthetic.csv"));
  EXPECT_TRUE(fs::exists(data / "generative_weights.json"));

  const auto csv_config = write_config(Json::parse(R"({
    "seed": 3, "out": "csvrun",
    "dataset": {"csv": "run/data/synthetic.csv", "schema": "run/data/synthetic.schema"},
    "models": ["LogisticRegression"]
  })"), "csv.json");
  const auto trained = run({"--config", csv_config.string(), "train"});
  ASSERT_EQ(trained.status, 0) << trained.err;
  const auto table = Json::parse(read_file(dir_ / "csvrun" / "train" / "table1.json"));
  EXPECT_EQ(table[0]["n_rows"], 400);
  EXPECT_GT(table[0]["auc"].get<double>(), 0.6);
}

TEST_F(Cli, UnknownCommandFails) {
  const auto config = write_config(quick_config());
  EXPECT_NE(run({"--config", config.string(), "frobnicate"}).status, 0);
  EXPECT_NE(run({"train"}).status, 0);
}

}  // namespace
}  // namespace fraudx::cli
