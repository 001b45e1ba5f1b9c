#include <cmath>
#include <random>

#include "fraudx/metrics.hpp"
#include "gtest/gtest.h"
#include "support.hpp"

namespace fraudx {
namespace {

TEST(ClassificationReport, HandComputedExample) {
  const auto r = classification_report(std::vector<int>{1, 0, 1, 1}, std::vector<int>{1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_NEAR(r.recall, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.f1, 0.8);
  EXPECT_EQ(r.confusion, (Confusion{2, 0, 1, 1}));
  EXPECT_EQ(r.n_rows, 4u);
}

TEST(ClassificationReport, PerfectAndDegeneratePredictors) {
  const std::vector<int> labels = {1, 0, 0, 1, 0};
  const auto perfect = classification_report(labels, labels);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);

  const auto zeros = classification_report(labels, std::vector<int>(5, 0));
  EXPECT_EQ(zeros.precision, 0.0);
  EXPECT_EQ(zeros.recall, 0.0);
  EXPECT_EQ(zeros.f1, 0.0);
}

TEST(ClassificationReport, MacroAveragesBothClasses) {
  // Negative class: precision 1/2, recall 1/1.
  const auto r = classification_report(std::vector<int>{1, 0, 1, 1}, std::vector<int>{1, 0, 0, 1});
  EXPECT_NEAR(r.macro_precision, (1.0 + 0.5) / 2.0, 1e-12);
  EXPECT_NEAR(r.macro_recall, (2.0 / 3.0 + 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.macro_f1, (0.8 + 2.0 / 3.0) / 2.0, 1e-12);
}

TEST(ClassificationReport, Errors) {
  EXPECT_THROW(classification_report(std::vector<int>{1}, std::vector<int>{1, 0}), std::invalid_argument);
  EXPECT_THROW(classification_report(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
}

TEST(ClassificationReport, MatchesBruteForceOnRandomFixtures) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 1000;
    std::vector<int> labels(n), predictions(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng() % 2);
      predictions[i] = static_cast<int>(rng() % 2);
    }
    const auto r = classification_report(labels, predictions);
    const auto c = testing::brute_force_confusion(labels, predictions);
    EXPECT_EQ(r.confusion, c);
    EXPECT_EQ(c.tp + c.fp + c.tn + c.fn, r.n_rows);
    if (r.precision + r.recall > 0.0) {
      EXPECT_DOUBLE_EQ(r.f1, 2.0 * r.precision * r.recall / (r.precision + r.recall));
    }
  }
}

TEST(Auc, Examples) {
  EXPECT_EQ(auc(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.8, 0.9}), 1.0);
  EXPECT_EQ(auc(std::vector<int>{0, 1, 0, 1}, std::vector<double>(4, 0.3)), 0.5);
  EXPECT_DOUBLE_EQ(auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.9, 0.8, 0.3, 0.1}), 0.75);
}

TEST(Auc, Errors) {
  EXPECT_THROW(auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), std::invalid_argument);
  EXPECT_THROW(auc(std::vector<int>{1, 0}, std::vector<double>{0.1}), std::invalid_argument);
}

TEST(Auc, PropertiesOnRandomFixtures) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 400;
    std::vector<int> labels(n);
    std::vector<double> scores(n), negated(n), transformed(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng() % 2);
      scores[i] = static_cast<double>(rng() % 20) / 10.0;  // plenty of ties
      negated[i] = -scores[i];
      transformed[i] = std::exp(3.0 * scores[i]) + 1.0;
    }
    const double a = auc(labels, scores);
    EXPECT_NEAR(a, testing::brute_force_auc(labels, scores), 1e-12);
    EXPECT_NEAR(a + auc(labels, negated), 1.0, 1e-12);
    EXPECT_NEAR(a, auc(labels, transformed), 1e-12);
  }
}

TEST(Evaluate, FillsEveryField) {
  Dataset d;
  d.matrix = Matrix(4, 1);
  const double xs[4] = {0.9, 0.2, 0.6, 0.4};
  for (int i = 0; i < 4; ++i) d.matrix(i, 0) = xs[i];
  d.labels = std::vector<int>{1, 0, 0, 1};
  const auto sf = ScoreFunction::from_callable(1, ScoreSemantics::FraudProbability,
                                               [](std::span<const double> x) { return x[0]; });
  const auto r = evaluate(sf, d);
  EXPECT_EQ(r.confusion, (Confusion{1, 1, 1, 1}));
  ASSERT_TRUE(r.auc);
  EXPECT_DOUBLE_EQ(*r.auc, 0.75);
}

}  // namespace
}  // namespace fraudx
