#include "fraudx/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fraudx {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

EvalReport classification_report(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("classification_report: length mismatch");
  }
  if (labels.empty()) throw std::invalid_argument("classification_report: empty input");
  EvalReport report;
  auto& c = report.confusion;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] != 0;
    const bool predicted = predictions[i] != 0;
    if (actual && predicted) {
      ++c.tp;
    } else if (!actual && predicted) {
      ++c.fp;
    } else if (!actual) {
      ++c.tn;
    } else {
      ++c.fn;
    }
  }
  report.n_rows = labels.size();
  report.precision = ratio(c.tp, c.tp + c.fp);
  report.recall = ratio(c.tp, c.tp + c.fn);
  report.f1 = harmonic(report.precision, report.recall);

  const double neg_precision = ratio(c.tn, c.tn + c.fn);
  const double neg_recall = ratio(c.tn, c.tn + c.fp);
  report.macro_precision = 0.5 * (report.precision + neg_precision);
  report.macro_recall = 0.5 * (report.recall + neg_recall);
  report.macro_f1 = 0.5 * (report.f1 + harmonic(neg_precision, neg_recall));
  return report;
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive midranks (1-based).
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t stop = start + 1;
    while (stop < order.size() && scores[order[stop]] == scores[order[start]]) ++stop;
    const double midrank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[order[k]] != 0) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    start = stop;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: labels contain a single class");
  const auto p = static_cast<double>(n_pos);
  const auto q = static_cast<double>(n_neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

EvalReport evaluate(const ScoreFunction& sf, const Dataset& data) {
  if (!data.labels) throw std::invalid_argument("evaluate: data has no labels");
  const auto scores = batch_evaluate(sf, data);
  std::vector<int> predictions(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    predictions[i] = scores[i] >= sf.threshold() ? 1 : 0;
  }
  auto report = classification_report(*data.labels, predictions);
  const auto& labels = *data.labels;
  const bool both = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 1; }) &&
                    std::any_of(labels.begin(), labels.end(), [](int y) { return y == 0; });
  if (both) report.auc = auc(labels, scores);
  return report;
}

}  // namespace fraudx
