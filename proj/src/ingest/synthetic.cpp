#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fraudx/ingest.hpp"

namespace fraudx {
namespace {

constexpr double kCategoricalMissingRate = 0.02;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Intercept b such that mean_i sigmoid(b + logit_i) == target.
double calibrate_intercept(const std::vector<double>& logits, double target) {
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (const double z : logits) mean += sigmoid(mid + z);
    mean /= static_cast<double>(logits.size());
    if (mean < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FeatureLayout transaction_feature_layout() {
  return {
      {"TransactionAmt", "card1", "card2", "card3", "card5", "id_01", "id_02", "id_05"},
      {"ProductCD", "card4", "card6", "P_emaildomain", "R_emaildomain", "DeviceType", "DeviceInfo",
       "M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "M9"},
  };
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.fraud_rate > 0.0 && spec.fraud_rate < 0.5)) {
    throw IngestError("fraud_rate must lie in (0, 0.5)");
  }
  if (static_cast<double>(spec.n_rows) * spec.fraud_rate < 5.0) {
    throw IngestError("n_rows too small: expected fewer than 5 fraud rows");
  }
  const std::size_t d = spec.n_numeric + spec.n_categorical;
  if (d == 0) throw IngestError("synthetic data needs at least one feature");
  if (spec.n_informative > d) throw IngestError("n_informative exceeds the feature count");
  if (spec.n_categorical > 0 && spec.categories_per_column < 2) {
    throw IngestError("categorical columns need at least 2 categories");
  }
  if (!spec.feature_names.empty() && spec.feature_names.size() != d) {
    throw IngestError("feature_names must name every feature");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto schema = std::make_shared<Schema>();
  schema->columns.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto& column = schema->columns[j];
    if (!spec.feature_names.empty()) {
      column.name = spec.feature_names[j];
    } else if (j < spec.n_numeric) {
      column.name = "num_" + std::to_string(j);
    } else {
      column.name = "cat_" + std::to_string(j - spec.n_numeric);
    }
    column.kind = j < spec.n_numeric ? ColumnKind::Numeric : ColumnKind::Categorical;
  }

  Matrix matrix(spec.n_rows, d);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    for (std::size_t j = 0; j < spec.n_numeric; ++j) matrix(i, j) = normal(rng);
  }

  // Latent categories follow p(k) ~ 1/(k+1); codes are then assigned by
  // observed frequency so the schema obeys the usual encoding rule.
  const std::size_t k_cats = spec.categories_per_column;
  std::vector<double> zipf(k_cats);
  for (std::size_t k = 0; k < k_cats; ++k) zipf[k] = 1.0 / static_cast<double>(k + 1);
  std::discrete_distribution<std::size_t> latent(zipf.begin(), zipf.end());
  for (std::size_t c = 0; c < spec.n_categorical; ++c) {
    const std::size_t j = spec.n_numeric + c;
    std::vector<int> draws(spec.n_rows);
    std::vector<std::size_t> counts(k_cats, 0);
    std::size_t missing = 0;
    for (auto& draw : draws) {
      if (unit(rng) < kCategoricalMissingRate) {
        draw = -1;
        ++missing;
      } else {
        draw = static_cast<int>(latent(rng));
        ++counts[static_cast<std::size_t>(draw)];
      }
    }
    std::vector<std::size_t> order(k_cats);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    std::vector<int> code_of_latent(k_cats, 0);
    auto& map = schema->columns[j].categories;
    const auto n = static_cast<double>(spec.n_rows);
    map.categories.push_back("");
    map.frequency.push_back(static_cast<double>(missing) / n);
    for (const auto k : order) {
      const std::string name = "v" + std::to_string(k + 1);
      code_of_latent[k] = static_cast<int>(map.categories.size());
      map.codes.emplace(name, code_of_latent[k]);
      map.categories.push_back(name);
      map.frequency.push_back(static_cast<double>(counts[k]) / n);
    }
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
      matrix(i, j) = draws[i] < 0 ? 0.0 : code_of_latent[static_cast<std::size_t>(draws[i])];
    }
  }

  std::vector<std::size_t> features(d);
  std::iota(features.begin(), features.end(), 0);
  std::shuffle(features.begin(), features.end(), rng);
  features.resize(spec.n_informative);
  std::sort(features.begin(), features.end());

  SyntheticData out;
  std::uniform_real_distribution<double> magnitude(0.8, 1.5);
  for (const auto j : features) {
    double w = magnitude(rng) * (unit(rng) < 0.5 ? -1.0 : 1.0);
    if (schema->is_categorical(j)) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < spec.n_rows; ++i) mean += matrix(i, j);
      mean /= static_cast<double>(spec.n_rows);
      for (std::size_t i = 0; i < spec.n_rows; ++i) sq += (matrix(i, j) - mean) * (matrix(i, j) - mean);
      const double sd = std::sqrt(sq / static_cast<double>(spec.n_rows));
      if (sd > 0.0) w /= sd;
    }
    out.weights.push_back({j, schema->columns[j].name, w});
  }

  std::vector<double> logits(spec.n_rows, 0.0);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    for (const auto& gw : out.weights) logits[i] += gw.weight * matrix(i, gw.feature);
  }
  out.intercept = calibrate_intercept(logits, spec.fraud_rate);

  std::vector<int> labels(spec.n_rows);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    labels[i] = unit(rng) < sigmoid(out.intercept + logits[i]) ? 1 : 0;
  }

  out.dataset.matrix = std::move(matrix);
  out.dataset.labels = std::move(labels);
  out.dataset.schema = std::move(schema);
  out.dataset.row_ids.reserve(spec.n_rows);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    out.dataset.row_ids.push_back("row-" + std::to_string(i + 1));
  }
  return out;
}

}  // namespace fraudx
