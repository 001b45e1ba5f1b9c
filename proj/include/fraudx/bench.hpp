#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraudx/explain.hpp"
#include "fraudx/ingest.hpp"
#include "fraudx/metrics.hpp"
#include "fraudx/models.hpp"

namespace fraudx {

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trained model with the identifier used in reports (the model kind name
// for the standard grid).
struct NamedModel {
  std::string id;
  ScoreFunction sf;
};

// Shared explainer configuration for every study.
struct ExplainerSettings {
  std::optional<CoalitionBudget> n_coalitions;  // default 2M + 2048
  std::uint64_t seed = 0;
  LimeOptions lime;
  std::size_t top_k = 10;
  std::vector<std::string> feature_names;  // empty: taken from the data's schema
};

// Runs one explainer on one model. Feature names come from the training
// data's schema; LIME perturbs around `train_data`.
Attribution explain_instance(const ScoreFunction& sf, ExplainMethod method,
                             std::span<const double> instance, const BackgroundSpec& background,
                             const Dataset& train_data, const ExplainerSettings& settings);

// ---------------------------------------------------------------------------
// Agreement.

struct AgreementReport {
  std::string model_kind;
  std::string explainer;
  std::string reference;  // "lr_global" or "<model>:<explainer>"
  std::size_t k = 0;
  std::size_t overlap_at_10 = 0;  // shared features between the two top-k lists
  std::size_t rank_footrule = 0;  // sum of |rank_a - rank_b| over shared features
  std::vector<std::string> features;            // this explanation's top-k
  std::vector<std::string> reference_features;  // the reference top-k
};

// Throws BenchError when the two rankings were cut at different k.
AgreementReport agreement(const RankedFeatures& a, const RankedFeatures& b);

// One report per (model, explainer) against the logistic-regression global
// ranking, skipping LIME for models that do not output probabilities. When
// both an Autoencoder and an IsolationForest are present, adds a cross report
// of the IsolationForest explanation against the Autoencoder one per explainer.
std::vector<AgreementReport> run_agreement_study(const std::vector<NamedModel>& models,
                                                 const std::vector<ExplainMethod>& explainers,
                                                 std::span<const double> instance,
                                                 const BackgroundSpec& background,
                                                 const RankedFeatures& lr_reference,
                                                 const Dataset& train_data,
                                                 const ExplainerSettings& settings);

// ---------------------------------------------------------------------------
// Background sensitivity.

struct SensitivityRow {
  std::string model_kind;
  std::size_t overlap_at_10 = 0;
  std::size_t rank_footrule = 0;
  bool stable = false;  // overlap_at_10 >= the study's stability threshold
  std::vector<std::string> normal_features;
  std::vector<std::string> fraud_features;
};

inline constexpr std::size_t kDefaultStabilityThreshold = 7;

// KernelSHAP under a normal-only and a fraud-only background; overlap of the
// two top-k rankings per model.
std::vector<SensitivityRow> run_sensitivity_study(const std::vector<NamedModel>& models,
                                                  std::span<const double> instance,
                                                  const BackgroundSpec& normal_background,
                                                  const BackgroundSpec& fraud_background,
                                                  const ExplainerSettings& settings,
                                                  std::size_t stability_threshold =
                                                      kDefaultStabilityThreshold);

// ---------------------------------------------------------------------------
// Timing.

struct BenchRecord {
  std::string model_kind;
  std::string explainer;
  std::optional<std::size_t> background_size;
  double wall_seconds = 0.0;  // median of the timed repeats
  std::size_t n_repeats = 0;
  std::string instance_id;
  std::vector<double> samples;
  bool skipped = false;
  std::string skip_reason;
};

struct TimingOptions {
  std::vector<std::size_t> sizes = {600, 1000, 4000};
  bool lime_enabled = true;
  std::size_t n_repeats = 3;
  bool warm_up = true;
  std::uint64_t background_seed = 0;
};

// One record (or skip marker) per Table-2 cell: KernelSHAP at every
// background size, then LIME for probability models. Backgrounds are
// subsampled from `background_source` outside the timer.
std::vector<BenchRecord> run_timing_study(const std::vector<NamedModel>& models,
                                          std::span<const double> instance,
                                          const std::string& instance_id,
                                          const Dataset& background_source,
                                          const Dataset& train_data,
                                          const ExplainerSettings& settings,
                                          const TimingOptions& options = {});

// |mean base value - mean model score| per (model, background size): how far
// the expected value implied by a subsampled background sits from the
// model's mean output on `data`.
struct TradeoffRow {
  std::string model_kind;
  std::size_t background_size = 0;
  double mean_base_value = 0.0;
  double mean_model_score = 0.0;
  double gap = 0.0;
};

// `n_draws` backgrounds per size (seeds derived from `seed`) are averaged.
std::vector<TradeoffRow> background_tradeoff(const std::vector<NamedModel>& models,
                                             const Dataset& data,
                                             const std::vector<std::size_t>& sizes,
                                             std::uint64_t seed, std::size_t n_draws = 5);

// ---------------------------------------------------------------------------
// Published reference numbers for side-by-side reporting.

struct ReferenceMetrics {
  ModelKind kind;
  double precision;
  double recall;
  double f1;
  double auc;
};
const std::vector<ReferenceMetrics>& reference_table1();
std::optional<ReferenceMetrics> reference_metrics(ModelKind kind);

struct ReferenceTiming {
  ModelKind kind;
  double shap_600;
  double shap_1000;
  double shap_4000;
  std::optional<double> lime;
};
const std::vector<ReferenceTiming>& reference_table2();

// AUC tolerance for the informational comparison against reference_table1().
inline constexpr double kReferenceAucTolerance = 0.05;

// ---------------------------------------------------------------------------
// Report.

struct Table1Row {
  std::string model_kind;
  EvalReport report;
  std::optional<ModelKind> kind;  // selects the reference row, if any
};

struct ReportMeta {
  std::uint64_t seed = 0;
  std::string dataset;
  std::string git_describe;
};

struct StudyReport {
  ReportMeta meta;
  std::vector<Table1Row> table1;
  std::vector<AgreementReport> agreement;
  std::vector<SensitivityRow> sensitivity;
  std::vector<BenchRecord> timing;
  std::vector<TradeoffRow> tradeoff;
};

// Build-time `git describe`, or "unknown".
std::string git_describe();

}  // namespace fraudx
