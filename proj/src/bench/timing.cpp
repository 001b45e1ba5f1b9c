#include <algorithm>
#include <chrono>

#include "fraudx/bench.hpp"

namespace fraudx {
namespace {

template <typename Fn>
BenchRecord time_cell(const TimingOptions& options, Fn&& fn) {
  if (options.n_repeats < 3) throw BenchError("timing needs at least 3 repeats");
  if (options.warm_up) fn();
  BenchRecord record;
  record.n_repeats = options.n_repeats;
  for (std::size_t r = 0; r < options.n_repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    record.samples.push_back(std::chrono::duration<double>(stop - start).count());
  }
  auto sorted = record.samples;
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  record.wall_seconds = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return record;
}

BenchRecord skipped(std::string reason) {
  BenchRecord record;
  record.skipped = true;
  record.skip_reason = std::move(reason);
  return record;
}

}  // namespace

std::vector<BenchRecord> run_timing_study(const std::vector<NamedModel>& models,
                                          std::span<const double> instance,
                                          const std::string& instance_id,
                                          const Dataset& background_source,
                                          const Dataset& train_data,
                                          const ExplainerSettings& settings,
                                          const TimingOptions& options) {
  std::vector<BenchRecord> records;
  const auto push = [&](BenchRecord record, const NamedModel& model, ExplainMethod method,
                        std::optional<std::size_t> size) {
    record.model_kind = model.id;
    record.explainer = std::string(to_string(method));
    record.background_size = size;
    record.instance_id = instance_id;
    records.push_back(std::move(record));
  };

  for (const auto& model : models) {
    for (const auto size : options.sizes) {
      if (size > background_source.n_rows()) {
        push(skipped("background of " + std::to_string(size) + " rows requested, " +
                     std::to_string(background_source.n_rows()) + " available"),
             model, ExplainMethod::KernelShap, size);
        continue;
      }
      const auto background = resolve_background(
          BackgroundSpec::subsample(size, derive_seed(options.background_seed, size)),
          background_source);
      auto record = time_cell(options, [&] {
        explain_instance(model.sf, ExplainMethod::KernelShap, instance, background, train_data,
                         settings);
      });
      push(std::move(record), model, ExplainMethod::KernelShap, size);
    }
    if (!options.lime_enabled) continue;
    if (model.sf.semantics() != ScoreSemantics::FraudProbability) {
      push(skipped("LIME applies to fraud probability models only"), model, ExplainMethod::Lime,
           std::nullopt);
      continue;
    }
    const auto unused = BackgroundSpec::all();
    try {
      auto record = time_cell(options, [&] {
        explain_instance(model.sf, ExplainMethod::Lime, instance, unused, train_data, settings);
      });
      push(std::move(record), model, ExplainMethod::Lime, std::nullopt);
    } catch (const ExplainError& e) {
      push(skipped(e.what()), model, ExplainMethod::Lime, std::nullopt);
    }
  }
  return records;
}

}  // namespace fraudx
