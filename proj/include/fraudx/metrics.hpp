#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "fraudx/models.hpp"

namespace fraudx {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Positive-class (fraud) metrics plus their macro averages over both classes.
// Any ratio with a zero denominator is 0; so is f1 when precision + recall = 0.
struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auc;
  Confusion confusion;
  std::size_t n_rows = 0;
};

EvalReport classification_report(std::span<const int> labels, std::span<const int> predictions);

// Mann-Whitney form of ROC AUC with midranks for ties.
double auc(std::span<const int> labels, std::span<const double> scores);

// Scores `data` with `sf`, thresholds with predict_binary and fills every field.
EvalReport evaluate(const ScoreFunction& sf, const Dataset& data);

}  // namespace fraudx
