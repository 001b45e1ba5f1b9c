#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "fraudx/bench.hpp"

namespace fraudx {
namespace {

std::vector<std::string> names_of(const RankedFeatures& r) {
  std::vector<std::string> out;
  out.reserve(r.entries.size());
  for (const auto& e : r.entries) out.push_back(e.feature_name);
  return out;
}

std::vector<std::string> feature_names_of(const Dataset& data) {
  if (data.schema && data.schema->size() == data.n_features()) return data.schema->feature_names();
  return {};
}

bool lime_applies(const ScoreFunction& sf) {
  return sf.semantics() == ScoreSemantics::FraudProbability;
}

}  // namespace

Attribution explain_instance(const ScoreFunction& sf, ExplainMethod method,
                             std::span<const double> instance, const BackgroundSpec& background,
                             const Dataset& train_data, const ExplainerSettings& settings) {
  switch (method) {
    case ExplainMethod::KernelShap: {
      KernelShapOptions options;
      options.budget = settings.n_coalitions;
      options.seed = settings.seed;
      options.feature_names =
          settings.feature_names.empty() ? feature_names_of(train_data) : settings.feature_names;
      return kernel_shap(sf, instance, background, options);
    }
    case ExplainMethod::ExactShapley:
      return exact_shapley(sf, instance, background,
                           settings.feature_names.empty() ? feature_names_of(train_data)
                                                          : settings.feature_names);
    case ExplainMethod::Lime: {
      auto options = settings.lime;
      options.seed = settings.seed;
      return lime(sf, instance, train_data, options);
    }
  }
  throw ExplainError("unknown explanation method");
}

AgreementReport agreement(const RankedFeatures& a, const RankedFeatures& b) {
  if (a.k != b.k) {
    throw BenchError("agreement needs rankings cut at the same k (" + std::to_string(a.k) +
                     " vs " + std::to_string(b.k) + ")");
  }
  AgreementReport report;
  report.k = a.k;
  std::unordered_map<std::string, std::size_t> rank_b;
  for (const auto& e : b.entries) rank_b.emplace(e.feature_name, e.rank);
  for (const auto& e : a.entries) {
    const auto it = rank_b.find(e.feature_name);
    if (it == rank_b.end()) continue;
    ++report.overlap_at_10;
    report.rank_footrule += e.rank > it->second ? e.rank - it->second : it->second - e.rank;
  }
  report.features = names_of(a);
  report.reference_features = names_of(b);
  return report;
}

std::vector<AgreementReport> run_agreement_study(const std::vector<NamedModel>& models,
                                                 const std::vector<ExplainMethod>& explainers,
                                                 std::span<const double> instance,
                                                 const BackgroundSpec& background,
                                                 const RankedFeatures& lr_reference,
                                                 const Dataset& train_data,
                                                 const ExplainerSettings& settings) {
  std::vector<AgreementReport> reports;
  std::map<std::pair<ModelKind, ExplainMethod>, std::pair<std::string, RankedFeatures>> by_kind;
  for (const auto& model : models) {
    for (const auto method : explainers) {
      if (method == ExplainMethod::Lime && !lime_applies(model.sf)) continue;
      const auto attr = explain_instance(model.sf, method, instance, background, train_data, settings);
      auto ranked = rank(attr, settings.top_k);
      auto report = agreement(ranked, lr_reference);
      report.model_kind = model.id;
      report.explainer = std::string(to_string(method));
      report.reference = "lr_global";
      reports.push_back(std::move(report));
      by_kind.emplace(std::pair{model.sf.kind(), method}, std::pair{model.id, std::move(ranked)});
    }
  }
  for (const auto method : explainers) {
    const auto ae = by_kind.find({ModelKind::Autoencoder, method});
    const auto iso = by_kind.find({ModelKind::IsolationForest, method});
    if (ae == by_kind.end() || iso == by_kind.end()) continue;
    auto report = agreement(iso->second.second, ae->second.second);
    report.model_kind = iso->second.first;
    report.explainer = std::string(to_string(method));
    report.reference = ae->second.first + ":" + report.explainer;
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<SensitivityRow> run_sensitivity_study(const std::vector<NamedModel>& models,
                                                  std::span<const double> instance,
                                                  const BackgroundSpec& normal_background,
                                                  const BackgroundSpec& fraud_background,
                                                  const ExplainerSettings& settings,
                                                  std::size_t stability_threshold) {
  std::vector<SensitivityRow> rows;
  for (const auto& model : models) {
    KernelShapOptions options;
    options.budget = settings.n_coalitions;
    options.seed = settings.seed;
    options.feature_names = settings.feature_names;
    const auto normal = rank(kernel_shap(model.sf, instance, normal_background, options), settings.top_k);
    const auto fraud = rank(kernel_shap(model.sf, instance, fraud_background, options), settings.top_k);
    const auto a = agreement(normal, fraud);
    SensitivityRow row;
    row.model_kind = model.id;
    row.overlap_at_10 = a.overlap_at_10;
    row.rank_footrule = a.rank_footrule;
    row.stable = a.overlap_at_10 >= stability_threshold;
    row.normal_features = a.features;
    row.fraud_features = a.reference_features;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TradeoffRow> background_tradeoff(const std::vector<NamedModel>& models,
                                             const Dataset& data,
                                             const std::vector<std::size_t>& sizes,
                                             std::uint64_t seed, std::size_t n_draws) {
  if (n_draws == 0) throw BenchError("background_tradeoff needs at least one draw");
  std::vector<TradeoffRow> rows;
  for (const auto& model : models) {
    const auto scores = batch_evaluate(model.sf, data);
    if (scores.empty()) throw BenchError("background_tradeoff needs nonempty data");
    double mean_score = 0.0;
    for (const double s : scores) mean_score += s;
    mean_score /= static_cast<double>(scores.size());
    for (const auto size : sizes) {
      if (size > data.n_rows()) continue;
      double base = 0.0;
      for (std::size_t draw = 0; draw < n_draws; ++draw) {
        const auto bg = resolve_background(
            BackgroundSpec::subsample(size, derive_seed(seed, size * 1000 + draw)), data);
        double sum = 0.0;
        for (const auto i : bg.resolved_indices) sum += scores[i];
        base += sum / static_cast<double>(size);
      }
      base /= static_cast<double>(n_draws);
      rows.push_back({model.id, size, base, mean_score, std::abs(base - mean_score)});
    }
  }
  return rows;
}

}  // namespace fraudx
