#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudx/bench.hpp"
#include "fraudx/report.hpp"

namespace fraudx::cli {

// Carries every validation problem found, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct DatasetConfig {
  std::optional<std::filesystem::path> csv;
  std::optional<std::filesystem::path> schema;
  std::optional<SyntheticSpec> synthetic;  // seed filled from the run seed unless given
  double holdout_fraction = 0.2;
  std::string description() const;
};

struct ModelEntry {
  std::string id;
  ModelSpec spec;
};

struct BackgroundConfig {
  BackgroundStrategy strategy = BackgroundStrategy::Subsample;
  std::size_t size = 0;
};

struct StudyConfig {
  std::vector<ExplainMethod> explainers = {ExplainMethod::KernelShap, ExplainMethod::Lime};
  std::vector<std::size_t> timing_sizes = {600, 1000, 4000};
  bool timing_lime = true;
  std::size_t timing_repeats = 3;
  bool timing_warm_up = true;
  std::size_t tradeoff_draws = 5;
  std::size_t stability_threshold = kDefaultStabilityThreshold;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out;
  DatasetConfig dataset;
  std::vector<ModelEntry> models;
  ExplainerSettings explainer;
  BackgroundConfig explain_background{BackgroundStrategy::Subsample, 600};
  BackgroundConfig normal_background{BackgroundStrategy::NormalOnly, 600};
  BackgroundConfig fraud_background{BackgroundStrategy::FraudOnly, 0};
  std::optional<std::string> instance;  // row id; default: first normal validation row
  StudyConfig study;
  Json effective;  // the config as resolved, written next to the outputs

  const ModelEntry* find_model(const std::string& id) const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

// Relative paths resolve against `base_dir`. Flags in `overrides` win over
// config keys. Throws ConfigError listing every problem found.
RunConfig parse_run_config(const Json& json, const std::filesystem::path& base_dir,
                           const Overrides& overrides);
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides);

// Background seeds derive from the run seed and the role's stream.
BackgroundSpec to_spec(const BackgroundConfig& config, std::uint64_t seed);

}  // namespace fraudx::cli
