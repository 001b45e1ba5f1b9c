#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "run_config.hpp"

namespace fraudx::cli {

struct LoadedData {
  Dataset train;
  Dataset validation;
  std::optional<SyntheticData> synthetic;  // generator output, for synth
};

LoadedData load_data(const RunConfig& config);

struct ExplainRequest {
  std::string model_id;
  std::optional<std::string> instance_id;
  ExplainMethod method = ExplainMethod::KernelShap;
  std::optional<BackgroundConfig> background;
};

enum class Study { Agreement, Sensitivity, Timing, Tradeoff, All };
Study parse_study(const std::string& name);

// Each command writes under config.out only and returns the process exit code.
int cmd_synth(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_evaluate(const RunConfig& config, std::ostream& log);
int cmd_explain(const RunConfig& config, const ExplainRequest& request, std::ostream& log);
int cmd_study(const RunConfig& config, Study which, std::ostream& log);

// Full command line: parses flags, loads the config, dispatches. Errors go
// to `err` and yield a nonzero status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fraudx::cli
