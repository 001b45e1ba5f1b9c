#include <algorithm>
#include <numeric>
#include <random>

#include "fraudx/explain.hpp"

namespace fraudx {

std::string_view to_string(BackgroundStrategy strategy) {
  switch (strategy) {
    case BackgroundStrategy::All: return "all";
    case BackgroundStrategy::Subsample: return "subsample";
    case BackgroundStrategy::NormalOnly: return "normal_only";
    case BackgroundStrategy::FraudOnly: return "fraud_only";
    case BackgroundStrategy::Custom: return "custom";
  }
  return "unknown";
}

BackgroundStrategy parse_background_strategy(std::string_view name) {
  for (const auto s : {BackgroundStrategy::All, BackgroundStrategy::Subsample,
                       BackgroundStrategy::NormalOnly, BackgroundStrategy::FraudOnly,
                       BackgroundStrategy::Custom}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown background strategy '" + std::string(name) + "'");
}

BackgroundSpec resolve_background(const BackgroundSpec& spec, const Dataset& data) {
  BackgroundSpec out = spec;
  out.resolved_indices.clear();

  if (spec.strategy == BackgroundStrategy::Custom) {
    if (spec.custom_rows.empty()) throw ExplainError("custom background has no rows");
    if (data.n_rows() > 0 && spec.custom_rows.cols() != data.n_features()) {
      throw ExplainError("custom background has " + std::to_string(spec.custom_rows.cols()) +
                         " columns, data has " + std::to_string(data.n_features()));
    }
    out.resolved_rows = spec.custom_rows;
    out.resolved = true;
    return out;
  }

  std::vector<std::size_t> candidates;
  if (spec.strategy == BackgroundStrategy::NormalOnly ||
      spec.strategy == BackgroundStrategy::FraudOnly) {
    if (!data.labels) {
      throw ExplainError(std::string(to_string(spec.strategy)) + " background needs labels");
    }
    const int wanted = spec.strategy == BackgroundStrategy::FraudOnly ? 1 : 0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      if ((*data.labels)[i] == wanted) candidates.push_back(i);
    }
  } else {
    candidates.resize(data.n_rows());
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  if (candidates.empty()) {
    throw ExplainError(std::string(to_string(spec.strategy)) + " background matched no rows");
  }

  if (spec.strategy == BackgroundStrategy::Subsample && spec.size == 0) {
    throw ExplainError("subsample background needs a size > 0");
  }
  if (spec.size > 0) {
    if (spec.size > candidates.size()) {
      throw ExplainError("background size " + std::to_string(spec.size) + " exceeds the " +
                         std::to_string(candidates.size()) + " available rows");
    }
    // Partial Fisher-Yates: the first `size` slots become a uniform sample.
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = 0; i < spec.size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
      std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(spec.size);
    std::sort(candidates.begin(), candidates.end());
  }

  out.resolved_rows = data.matrix.select_rows(candidates);
  out.resolved_indices = std::move(candidates);
  out.resolved = true;
  return out;
}

}  // namespace fraudx
