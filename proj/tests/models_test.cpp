#include <algorithm>
#include <cmath>
#include <sstream>

#include "fraudx/models.hpp"
#include "fraudx/models/classifiers.hpp"
#include "fraudx/models/mlp.hpp"
#include "gtest/gtest.h"
#include "support.hpp"

namespace fraudx {
namespace {

using testing::quick_spec;

class PerKind : public ::testing::TestWithParam<ModelKind> {
 protected:
  static const SyntheticData& data() {
    static const SyntheticData d = testing::synthetic(600, 6, 2, 17);
    return d;
  }
};

TEST_P(PerKind, DeterministicTraining) {
  const auto a = train(quick_spec(GetParam(), 5), data().dataset);
  const auto b = train(quick_spec(GetParam(), 5), data().dataset);
  EXPECT_EQ(batch_evaluate(a, data().dataset), batch_evaluate(b, data().dataset));
  EXPECT_EQ(a.threshold(), b.threshold());
}

TEST_P(PerKind, BatchEqualsLoop) {
  const auto sf = train(quick_spec(GetParam(), 2), data().dataset);
  std::vector<std::size_t> first(100);
  std::iota(first.begin(), first.end(), 0);
  const auto fixture = data().dataset.subset(first);
  const auto batch = batch_evaluate(sf, fixture);
  ASSERT_EQ(batch.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(batch[i], sf.evaluate(fixture.matrix.row(i)));

  const auto single = fixture.subset(std::vector<std::size_t>{7});
  const auto one = batch_evaluate(sf, single);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], sf.evaluate(single.matrix.row(0)));

  EXPECT_TRUE(batch_evaluate(sf, fixture.subset(std::vector<std::size_t>{})).empty());
}

TEST_P(PerKind, RepeatedEvaluationIsBitIdentical) {
  const auto sf = train(quick_spec(GetParam(), 2), data().dataset);
  const auto row = data().dataset.matrix.row(3);
  const double first = sf.evaluate(row);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(sf.evaluate(row), first);
}

TEST_P(PerKind, SemanticsAndRange) {
  const auto sf = train(quick_spec(GetParam(), 2), data().dataset);
  const auto scores = batch_evaluate(sf, data().dataset);
  switch (GetParam()) {
    case ModelKind::Autoencoder:
      EXPECT_EQ(sf.semantics(), ScoreSemantics::ReconstructionError);
      for (const double s : scores) EXPECT_GE(s, 0.0);
      break;
    case ModelKind::IsolationForest:
      EXPECT_EQ(sf.semantics(), ScoreSemantics::AnomalyScore);
      break;
    default:
      EXPECT_EQ(sf.semantics(), ScoreSemantics::FraudProbability);
      EXPECT_EQ(sf.threshold(), 0.5);
      for (const double s : scores) {
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
      }
  }
}

TEST_P(PerKind, SaveLoadRoundTripIsExact) {
  const auto sf = train(quick_spec(GetParam(), 9), data().dataset);
  std::stringstream first;
  save_model(sf, first);
  const auto loaded = load_model(first);
  EXPECT_EQ(loaded.kind(), sf.kind());
  EXPECT_EQ(loaded.threshold(), sf.threshold());
  EXPECT_EQ(batch_evaluate(loaded, data().dataset), batch_evaluate(sf, data().dataset));
  std::stringstream second;
  save_model(loaded, second);
  EXPECT_EQ(first.str(), second.str());
}

TEST_P(PerKind, FeatureCountMismatchIsRejected) {
  const auto sf = train(quick_spec(GetParam(), 2), data().dataset);
  EXPECT_THROW(batch_evaluate(sf, data().dataset.leading_features(3)), std::invalid_argument);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, PerKind,
                         ::testing::Values(ModelKind::NaiveBayes, ModelKind::LogisticRegression,
                                           ModelKind::DecisionTree, ModelKind::RandomForest,
                                           ModelKind::GradientBoosting, ModelKind::NeuralNetwork,
                                           ModelKind::Autoencoder, ModelKind::IsolationForest),
                         [](const auto& info) { return std::string(to_string(info.param)); });

Dataset xor_data() {
  Dataset d;
  d.matrix = Matrix(4, 2);
  const double pts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    d.matrix(i, 0) = pts[i][0];
    d.matrix(i, 1) = pts[i][1];
  }
  d.labels = std::vector<int>{0, 1, 1, 0};
  d.row_ids = {"a", "b", "c", "d"};
  auto schema = std::make_shared<Schema>();
  schema->columns = {{"x0", ColumnKind::Numeric, {}, {}}, {"x1", ColumnKind::Numeric, {}, {}}};
  d.schema = schema;
  return d;
}

TEST(DecisionTree, SolvesXor) {
  const auto d = xor_data();
  const auto sf = train(ModelSpec::defaults(ModelKind::DecisionTree, 0), d);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(predict_binary(sf, d.matrix.row(i)), (*d.labels)[i]) << "point " << i;
  }
  const auto& tree = dynamic_cast<const DecisionTreeModel&>(sf.model()).tree();
  EXPECT_GE(tree.depth(), 2);
}

TEST(NaiveBayes, SingleClassDataGivesThatClass) {
  auto d = testing::synthetic(300, 3, 1, 4).dataset;
  std::fill(d.labels->begin(), d.labels->end(), 0);
  const auto sf = train(ModelSpec::defaults(ModelKind::NaiveBayes, 0), d);
  for (const double s : batch_evaluate(sf, d)) EXPECT_NEAR(s, 0.0, 1e-12);
  std::fill(d.labels->begin(), d.labels->end(), 1);
  const auto sf1 = train(ModelSpec::defaults(ModelKind::NaiveBayes, 0), d);
  for (const double s : batch_evaluate(sf1, d)) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(GradientBoosting, DefaultsMatchReferenceConfiguration) {
  const auto spec = ModelSpec::defaults(ModelKind::GradientBoosting, 0);
  const auto& p = std::get<GradientBoostingParams>(spec.params);
  EXPECT_EQ(p.n_estimators, 100);
  EXPECT_EQ(p.max_depth, 12);
  EXPECT_EQ(p.learning_rate, 0.002);

  const auto d = testing::synthetic(1000, 6, 2, 3).dataset;
  const auto sf = train(spec, d);
  const auto& gbt = dynamic_cast<const GradientBoostingModel&>(sf.model());
  EXPECT_EQ(gbt.trees().size(), 100u);
  EXPECT_EQ(gbt.learning_rate(), 0.002);
  for (const auto& t : gbt.trees()) EXPECT_LE(t.depth(), 12);
}

TEST(ModelDefaults, ReferenceArchitectures) {
  const auto nn = std::get<NeuralNetworkParams>(ModelSpec::defaults(ModelKind::NeuralNetwork).params);
  EXPECT_EQ(nn.mlp.hidden, (std::vector<int>{50, 50, 50}));
  const auto ae = std::get<AutoencoderParams>(ModelSpec::defaults(ModelKind::Autoencoder).params);
  EXPECT_EQ(ae.mlp.hidden, (std::vector<int>{50, 50, 50}));
  EXPECT_EQ(std::get<RandomForestParams>(ModelSpec::defaults(ModelKind::RandomForest).params).n_estimators, 100);
  EXPECT_EQ(std::get<IsolationForestParams>(ModelSpec::defaults(ModelKind::IsolationForest).params).n_estimators, 100);
}

TEST(Train, SupervisedKindNeedsLabels) {
  auto d = testing::synthetic(300, 3, 1, 4).dataset;
  d.labels.reset();
  EXPECT_THROW(train(ModelSpec::defaults(ModelKind::LogisticRegression, 0), d), TrainingError);
  EXPECT_NO_THROW(train(quick_spec(ModelKind::IsolationForest, 0), d));
}

TEST(Train, DivergenceReportsIteration) {
  const auto d = testing::synthetic(300, 3, 1, 4).dataset;
  auto spec = ModelSpec::defaults(ModelKind::Autoencoder, 0);
  auto& mlp = std::get<AutoencoderParams>(spec.params).mlp;
  mlp.learning_rate = 1e200;
  mlp.epochs = 3;
  try {
    train(spec, d);
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(PredictBinary, ThresholdIsInclusive) {
  const auto sf = ScoreFunction::from_callable(1, ScoreSemantics::FraudProbability,
                                               [](std::span<const double> x) { return x[0]; });
  const double a = 0.7, b = 0.5, c = 0.49;
  EXPECT_EQ(predict_binary(sf, std::span(&a, 1)), 1);
  EXPECT_EQ(predict_binary(sf, std::span(&b, 1)), 1);
  EXPECT_EQ(predict_binary(sf, std::span(&c, 1)), 0);
}

TEST(Autoencoder, HighQuantileErrorIsFlagged) {
  const auto d = testing::synthetic(1000, 6, 0, 4).dataset;
  auto spec = quick_spec(ModelKind::Autoencoder, 1);
  std::get<AutoencoderParams>(spec.params).contamination = 0.0349;
  const auto sf = train(spec, d);
  const auto scores = batch_evaluate(sf, d);
  EXPECT_EQ(sf.threshold(), contamination_threshold(scores, 0.0349));
  auto sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double p99 = sorted[static_cast<std::size_t>(0.99 * static_cast<double>(sorted.size()))];
  const auto idx = static_cast<std::size_t>(std::find(scores.begin(), scores.end(), p99) - scores.begin());
  EXPECT_EQ(predict_binary(sf, d.matrix.row(idx)), 1);
}

TEST(Autoencoder, SeparatesInjectedOutliers) {
  auto d = testing::synthetic(1000, 6, 0, 12).dataset;
  const auto sf = train(quick_spec(ModelKind::Autoencoder, 3), d);
  std::vector<std::size_t> picks(50);
  std::iota(picks.begin(), picks.end(), 0);
  auto outliers = d.subset(picks);
  for (std::size_t i = 0; i < outliers.n_rows(); ++i) outliers.matrix(i, i % 6) += 10.0;
  const auto inlier_scores = batch_evaluate(sf, d.subset(picks));
  const auto outlier_scores = batch_evaluate(sf, outliers);
  const double mean_in = std::accumulate(inlier_scores.begin(), inlier_scores.end(), 0.0) / 50.0;
  const double mean_out = std::accumulate(outlier_scores.begin(), outlier_scores.end(), 0.0) / 50.0;
  EXPECT_GT(mean_out, mean_in);
}

TEST(IsolationForest, IsolatedPointScoresHighest) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.1);
  Dataset d;
  d.matrix = Matrix(500, 3);
  for (std::size_t i = 0; i < 499; ++i) {
    for (std::size_t j = 0; j < 3; ++j) d.matrix(i, j) = g(rng);
  }
  for (std::size_t j = 0; j < 3; ++j) d.matrix(499, j) = 1.0;  // 10 std away
  for (std::size_t i = 0; i < 500; ++i) d.row_ids.push_back("r" + std::to_string(i));
  const auto sf = train(ModelSpec::defaults(ModelKind::IsolationForest, 2), d);
  const auto scores = batch_evaluate(sf, d);
  EXPECT_EQ(std::max_element(scores.begin(), scores.end()) - scores.begin(), 499);
}

TEST(IsolationForest, AveragePathLength) {
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_EQ(average_path_length(2), 1.0);
  // c(256) = 2 H(255) - 2 * 255 / 256 with H(i) ~ ln(i) + Euler gamma.
  EXPECT_NEAR(average_path_length(256), 2.0 * (std::log(255.0) + 0.5772156649) - 2.0 * 255.0 / 256.0, 1e-2);
}

Dataset ten_rows() {
  std::vector<std::size_t> idx(10);
  std::iota(idx.begin(), idx.end(), 0);
  return testing::synthetic(100, 5, 1, 3).dataset.subset(idx);
}

TEST(Mlp, GradientCheckClassifier) {
  const auto d = ten_rows();
  Mlp net(6, {50, 50, 50}, 1, Mlp::Head::SigmoidCrossEntropy, 7);
  net.fit_input_scaling(d.matrix);
  std::vector<double> targets(d.labels->begin(), d.labels->end());
  EXPECT_LT(testing::gradient_relative_error(net, d.matrix, targets), 1e-4);
}

TEST(Mlp, GradientCheckAutoencoder) {
  const auto d = ten_rows();
  Mlp net(6, {50, 50, 50}, 6, Mlp::Head::LinearSquaredError, 7);
  net.fit_input_scaling(d.matrix);
  EXPECT_LT(testing::gradient_relative_error(net, d.matrix, {}), 1e-4);
}

TEST(Contamination, QuantileRule) {
  std::vector<double> s(101);
  std::iota(s.begin(), s.end(), 0.0);
  EXPECT_DOUBLE_EQ(contamination_threshold(s, 0.035), 96.5);
  EXPECT_THROW(contamination_threshold(s, 0.0), std::invalid_argument);
}

TEST(LoadModel, RejectsCorruptInput) {
  std::stringstream bad("fraudx-model 2\n");
  EXPECT_THROW(load_model(bad), ModelFormatError);
  std::stringstream truncated("fraudx-model 1\nkind LogisticRegression\nsemantics fraud_probability\n");
  EXPECT_THROW(load_model(truncated), ModelFormatError);
}

}  // namespace
}  // namespace fraudx
