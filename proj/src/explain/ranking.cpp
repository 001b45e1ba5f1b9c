#include <algorithm>
#include <cmath>
#include <numeric>

#include "fraudx/explain.hpp"
#include "fraudx/models/classifiers.hpp"

namespace fraudx {
namespace {

RankedFeatures rank_values(const std::vector<std::string>& names, const std::vector<double>& phi,
                           std::size_t k) {
  std::vector<std::size_t> order(phi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(phi[a]) > std::abs(phi[b]);
  });
  RankedFeatures out;
  out.k = k;
  const std::size_t n = std::min(k, phi.size());
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    out.entries.push_back({j < names.size() ? names[j] : "f" + std::to_string(j), j, phi[j], r + 1});
  }
  return out;
}

}  // namespace

std::string_view to_string(ExplainMethod method) {
  switch (method) {
    case ExplainMethod::KernelShap: return "kernel_shap";
    case ExplainMethod::Lime: return "lime";
    case ExplainMethod::ExactShapley: return "exact_shapley";
  }
  return "unknown";
}

ExplainMethod parse_explain_method(std::string_view name) {
  for (const auto m : {ExplainMethod::KernelShap, ExplainMethod::Lime, ExplainMethod::ExactShapley}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown explanation method '" + std::string(name) + "'");
}

RankedFeatures rank(const Attribution& attribution, std::size_t k) {
  return rank_values(attribution.feature_names, attribution.phi, k);
}

RankedFeatures global_lr_importance(const ScoreFunction& lr, const Dataset& data, std::size_t k) {
  const auto* model = dynamic_cast<const LogisticRegressionModel*>(&lr.model());
  if (model == nullptr) {
    throw ExplainError("global importance needs a LogisticRegression model, got " +
                       std::string(to_string(lr.kind())));
  }
  const auto& coef = model->coefficients();
  if (coef.size() != data.n_features()) {
    throw ExplainError("model has " + std::to_string(coef.size()) + " coefficients, data has " +
                       std::to_string(data.n_features()) + " features");
  }
  if (data.n_rows() == 0) throw ExplainError("global importance needs nonempty data");
  const auto n = static_cast<double>(data.n_rows());
  std::vector<double> phi(coef.size());
  for (std::size_t j = 0; j < coef.size(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) mean += data.matrix(r, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
      const double d = data.matrix(r, j) - mean;
      var += d * d;
    }
    phi[j] = coef[j] * std::sqrt(var / n);
  }
  const auto names = data.schema ? data.schema->feature_names() : std::vector<std::string>{};
  return rank_values(names, phi, k);
}

}  // namespace fraudx
