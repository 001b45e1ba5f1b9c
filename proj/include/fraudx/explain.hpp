#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraudx/ingest.hpp"
#include "fraudx/matrix.hpp"
#include "fraudx/models.hpp"

namespace fraudx {

class ExplainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Background (reference) data for Shapley explanations.

enum class BackgroundStrategy { All, Subsample, NormalOnly, FraudOnly, Custom };

std::string_view to_string(BackgroundStrategy strategy);
BackgroundStrategy parse_background_strategy(std::string_view name);

struct BackgroundSpec {
  BackgroundStrategy strategy = BackgroundStrategy::All;
  // Rows drawn without replacement after label filtering; 0 keeps every
  // candidate row. Required (> 0) for Subsample.
  std::size_t size = 0;
  std::uint64_t seed = 0;
  Matrix custom_rows;

  // Filled in by resolve_background().
  Matrix resolved_rows;
  std::vector<std::size_t> resolved_indices;  // into the source dataset; empty for Custom
  bool resolved = false;

  static BackgroundSpec all() { return {}; }
  static BackgroundSpec subsample(std::size_t s, std::uint64_t seed) {
    BackgroundSpec spec;
    spec.strategy = BackgroundStrategy::Subsample;
    spec.size = s;
    spec.seed = seed;
    return spec;
  }
  static BackgroundSpec normal_only(std::size_t s = 0, std::uint64_t seed = 0) {
    BackgroundSpec spec = subsample(s, seed);
    spec.strategy = BackgroundStrategy::NormalOnly;
    return spec;
  }
  static BackgroundSpec fraud_only(std::size_t s = 0, std::uint64_t seed = 0) {
    BackgroundSpec spec = subsample(s, seed);
    spec.strategy = BackgroundStrategy::FraudOnly;
    return spec;
  }
  static BackgroundSpec custom(Matrix rows) {
    BackgroundSpec spec;
    spec.strategy = BackgroundStrategy::Custom;
    spec.custom_rows = std::move(rows);
    return spec;
  }
};

// Label filters apply before subsampling. Deterministic per seed; the picked
// row indices are returned in ascending order.
BackgroundSpec resolve_background(const BackgroundSpec& spec, const Dataset& data);

// ---------------------------------------------------------------------------
// Attributions.

enum class ExplainMethod { KernelShap, Lime, ExactShapley };
std::string_view to_string(ExplainMethod method);
ExplainMethod parse_explain_method(std::string_view name);

struct ExplainDiagnostics {
  std::size_t coalitions = 0;      // Shapley methods: coalitions evaluated
  std::size_t perturbations = 0;   // LIME: perturbed samples scored
  bool full_enumeration = false;
  std::size_t background_rows = 0;
  std::optional<double> local_accuracy_residual;  // |base + sum(phi) - predicted|
  std::optional<double> regression_residual;      // weighted RMS of the coalition fit
  std::optional<double> surrogate_r2;
  std::optional<double> surrogate_prediction;
  std::optional<double> discrepancy;  // |surrogate(instance) - predicted|
  std::vector<std::size_t> selected_features;
};

struct Attribution {
  std::vector<std::string> feature_names;
  std::vector<double> phi;
  double base_value = 0.0;
  double predicted_value = 0.0;
  ExplainMethod method = ExplainMethod::KernelShap;
  ExplainDiagnostics diagnostics;
};

struct RankedFeature {
  std::string feature_name;
  std::size_t feature_index = 0;
  double phi = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct RankedFeatures {
  std::vector<RankedFeature> entries;
  std::size_t k = 0;
};

// ---------------------------------------------------------------------------
// Explainers.

// Coalition budget for KernelSHAP: either every coalition or a sample count.
struct CoalitionBudget {
  bool full = false;
  std::size_t count = 0;

  static CoalitionBudget all_coalitions() { return {true, 0}; }
  static CoalitionBudget samples(std::size_t n) { return {false, n}; }
  static CoalitionBudget default_for(std::size_t n_features) {
    return {false, 2 * n_features + 2048};
  }
};

inline constexpr std::size_t kMaxFullEnumerationFeatures = 20;
inline constexpr std::size_t kMaxExactShapleyFeatures = 12;

struct KernelShapOptions {
  std::optional<CoalitionBudget> budget;  // default: 2M + 2048 samples
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;  // default: f0, f1, ...
};

// KernelSHAP with interventional masking: absent features are filled from
// each background row and the masked prediction is the background mean.
// Solves the Shapley-kernel weighted least squares with the empty and full
// coalitions imposed as equality constraints.
Attribution kernel_shap(const ScoreFunction& sf, std::span<const double> instance,
                        const BackgroundSpec& background, const KernelShapOptions& options = {});

// Brute-force Shapley values over all 2^M coalitions (M <= 12).
Attribution exact_shapley(const ScoreFunction& sf, std::span<const double> instance,
                          const BackgroundSpec& background,
                          const std::vector<std::string>& feature_names = {});

struct LimeOptions {
  std::size_t n_perturbations = 5000;
  std::optional<double> kernel_width;  // default 0.75 * sqrt(M)
  std::size_t top_k = 10;
  double ridge = 1e-3;
  std::uint64_t seed = 0;
};

// Local linear surrogate on perturbations around the instance. Only for
// models whose score is a fraud probability.
Attribution lime(const ScoreFunction& sf, std::span<const double> instance,
                 const Dataset& train_data, const LimeOptions& options = {});

// Sorted by |phi| descending, ties by ascending feature index.
RankedFeatures rank(const Attribution& attribution, std::size_t k);

// Global importance of a trained logistic regression: |coef_i| * std_i(data),
// returned with phi = coef_i * std_i.
RankedFeatures global_lr_importance(const ScoreFunction& lr, const Dataset& data, std::size_t k);

// Shapley kernel weight for a coalition of `size` out of `m` features.
double shapley_kernel_weight(std::size_t m, std::size_t size);

}  // namespace fraudx
