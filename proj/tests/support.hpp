#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "fraudx/ingest.hpp"
#include "fraudx/metrics.hpp"
#include "fraudx/models.hpp"
#include "fraudx/models/mlp.hpp"

namespace fraudx::testing {

inline SyntheticData synthetic(std::size_t n_rows, std::size_t n_numeric, std::size_t n_categorical,
                               std::uint64_t seed, std::size_t n_informative = 5,
                               double fraud_rate = 0.1) {
  SyntheticSpec spec;
  spec.n_rows = n_rows;
  spec.n_numeric = n_numeric;
  spec.n_categorical = n_categorical;
  spec.n_informative = std::min(n_informative, n_numeric + n_categorical);
  spec.fraud_rate = fraud_rate;
  spec.seed = seed;
  return generate_synthetic(spec);
}

// Smaller-than-default hyperparameters so unit tests stay fast. Acceptance
// tests use ModelSpec::defaults.
inline ModelSpec quick_spec(ModelKind kind, std::uint64_t seed) {
  auto spec = ModelSpec::defaults(kind, seed);
  switch (kind) {
    case ModelKind::RandomForest: {
      auto& p = std::get<RandomForestParams>(spec.params);
      p.n_estimators = 15;
      p.max_depth = 8;
      break;
    }
    case ModelKind::GradientBoosting: {
      auto& p = std::get<GradientBoostingParams>(spec.params);
      p.n_estimators = 15;
      p.max_depth = 5;
      p.learning_rate = 0.1;
      break;
    }
    case ModelKind::NeuralNetwork:
      std::get<NeuralNetworkParams>(spec.params).mlp = MlpParams{{16, 16}, 1e-2, 0.9, 0.999, 1e-8, 64, 5};
      break;
    case ModelKind::Autoencoder:
      std::get<AutoencoderParams>(spec.params).mlp = MlpParams{{16, 16}, 1e-2, 0.9, 0.999, 1e-8, 64, 5};
      break;
    case ModelKind::IsolationForest:
      std::get<IsolationForestParams>(spec.params).n_estimators = 30;
      break;
    default:
      break;
  }
  return spec;
}

// ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-300) with
// central differences over every parameter.
inline double gradient_relative_error(const Mlp& net, const Matrix& x,
                                      std::span<const double> targets, double h = 1e-6) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> analytic;
  net.loss_and_gradient(x, rows, targets, {}, analytic);

  Mlp probe = net;
  auto params = net.parameters();
  std::vector<double> scratch;
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double original = params[p];
    params[p] = original + h;
    probe.set_parameters(params);
    const double up = probe.loss_and_gradient(x, rows, targets, {}, scratch);
    params[p] = original - h;
    probe.set_parameters(params);
    const double down = probe.loss_and_gradient(x, rows, targets, {}, scratch);
    params[p] = original;
    const double numeric = (up - down) / (2.0 * h);
    diff2 += (analytic[p] - numeric) * (analytic[p] - numeric);
    a2 += analytic[p] * analytic[p];
    n2 += numeric * numeric;
  }
  return std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-300);
}

inline Confusion brute_force_confusion(const std::vector<int>& labels,
                                       const std::vector<int>& predictions) {
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1 && predictions[i] == 1) ++c.tp;
    if (labels[i] == 0 && predictions[i] == 1) ++c.fp;
    if (labels[i] == 0 && predictions[i] == 0) ++c.tn;
    if (labels[i] == 1 && predictions[i] == 0) ++c.fn;
  }
  return c;
}

// P(score_pos > score_neg) + 0.5 P(tie), over every positive/negative pair.
inline double brute_force_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace fraudx::testing
