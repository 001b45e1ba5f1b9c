#pragma once

#include <istream>
#include <memory>
#include <vector>

#include "fraudx/models.hpp"
#include "fraudx/models/tree.hpp"

namespace fraudx {

// Per-row weights for training. All ones unless class weighting is on, in
// which case both classes carry equal total weight.
std::vector<double> training_weights(const std::vector<int>& labels, bool class_weighting);

// Gaussian likelihood for numeric columns, Laplace-smoothed categorical
// likelihood for coded columns.
class NaiveBayesModel final : public Model {
 public:
  static std::shared_ptr<NaiveBayesModel> fit(const NaiveBayesParams& params, const Dataset& data,
                                              bool class_weighting);
  static std::shared_ptr<NaiveBayesModel> load_body(std::istream& in, std::size_t n_features);

  ModelKind kind() const override { return ModelKind::NaiveBayes; }
  ScoreSemantics semantics() const override { return ScoreSemantics::FraudProbability; }
  std::size_t n_features() const override { return categorical_.size(); }
  double score(std::span<const double> x) const override;
  void save_body(std::ostream& out) const override;

 private:
  std::vector<char> categorical_;
  double log_prior_[2] = {0.0, 0.0};
  bool present_[2] = {false, false};
  // Numeric columns: mean/variance per class. Categorical: log P(code | class).
  std::vector<double> mean_[2];
  std::vector<double> var_[2];
  std::vector<std::vector<double>> log_prob_[2];
};

class LogisticRegressionModel final : public Model {
 public:
  static std::shared_ptr<LogisticRegressionModel> fit(const LogisticRegressionParams& params,
                                                      const Dataset& data, bool class_weighting);
  static std::shared_ptr<LogisticRegressionModel> load_body(std::istream& in,
                                                            std::size_t n_features);
  LogisticRegressionModel(std::vector<double> coefficients, double intercept)
      : coefficients_(std::move(coefficients)), intercept_(intercept) {}

  ModelKind kind() const override { return ModelKind::LogisticRegression; }
  ScoreSemantics semantics() const override { return ScoreSemantics::FraudProbability; }
  std::size_t n_features() const override { return coefficients_.size(); }
  double score(std::span<const double> x) const override;
  void save_body(std::ostream& out) const override;

  // In encoded feature units.
  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }
  int iterations() const { return iterations_; }

 private:
  std::vector<double> coefficients_;
  double intercept_ = 0.0;
  int iterations_ = 0;
};

class DecisionTreeModel final : public Model {
 public:
  static std::shared_ptr<DecisionTreeModel> fit(const DecisionTreeParams& params,
                                                const Dataset& data, bool class_weighting);
  static std::shared_ptr<DecisionTreeModel> load_body(std::istream& in, std::size_t n_features);
  DecisionTreeModel(Tree tree, std::size_t n_features)
      : tree_(std::move(tree)), n_features_(n_features) {}

  ModelKind kind() const override { return ModelKind::DecisionTree; }
  ScoreSemantics semantics() const override { return ScoreSemantics::FraudProbability; }
  std::size_t n_features() const override { return n_features_; }
  double score(std::span<const double> x) const override { return tree_.predict(x); }
  void save_body(std::ostream& out) const override;

  const Tree& tree() const { return tree_; }

 private:
  Tree tree_;
  std::size_t n_features_;
};

// Bootstrap-aggregated Gini trees; the score is the mean leaf probability.
class RandomForestModel final : public Model {
 public:
  static std::shared_ptr<RandomForestModel> fit(const RandomForestParams& params,
                                                const Dataset& data, std::uint64_t seed,
                                                bool class_weighting);
  static std::shared_ptr<RandomForestModel> load_body(std::istream& in, std::size_t n_features);
  RandomForestModel(std::vector<Tree> trees, std::size_t n_features)
      : trees_(std::move(trees)), n_features_(n_features) {}

  ModelKind kind() const override { return ModelKind::RandomForest; }
  ScoreSemantics semantics() const override { return ScoreSemantics::FraudProbability; }
  std::size_t n_features() const override { return n_features_; }
  double score(std::span<const double> x) const override;
  void save_body(std::ostream& out) const override;

  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  std::size_t n_features_;
};

// Logistic-loss boosting with second-order (Newton) splits and leaf values.
class GradientBoostingModel final : public Model {
 public:
  static std::shared_ptr<GradientBoostingModel> fit(const GradientBoostingParams& params,
                                                    const Dataset& data, bool class_weighting);
  static std::shared_ptr<GradientBoostingModel> load_body(std::istream& in,
                                                          std::size_t n_features);
  GradientBoostingModel(double base_margin, double learning_rate, std::vector<Tree> trees,
                        std::size_t n_features)
      : base_margin_(base_margin),
        learning_rate_(learning_rate),
        trees_(std::move(trees)),
        n_features_(n_features) {}

  ModelKind kind() const override { return ModelKind::GradientBoosting; }
  ScoreSemantics semantics() const override { return ScoreSemantics::FraudProbability; }
  std::size_t n_features() const override { return n_features_; }
  double score(std::span<const double> x) const override;
  double margin(std::span<const double> x) const;
  void save_body(std::ostream& out) const override;

  const std::vector<Tree>& trees() const { return trees_; }
  double learning_rate() const { return learning_rate_; }
  double base_margin() const { return base_margin_; }

 private:
  double base_margin_;
  double learning_rate_;
  std::vector<Tree> trees_;
  std::size_t n_features_;
};

// Isolation forest; score = 2^(-E[h(x)] / c(psi)), higher is more anomalous.
class IsolationForestModel final : public Model {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;  // training rows reaching a leaf
  };

  static std::shared_ptr<IsolationForestModel> fit(const IsolationForestParams& params,
                                                   const Dataset& data, std::uint64_t seed);
  static std::shared_ptr<IsolationForestModel> load_body(std::istream& in,
                                                         std::size_t n_features);

  ModelKind kind() const override { return ModelKind::IsolationForest; }
  ScoreSemantics semantics() const override { return ScoreSemantics::AnomalyScore; }
  std::size_t n_features() const override { return n_features_; }
  double score(std::span<const double> x) const override;
  void save_body(std::ostream& out) const override;

  double mean_path_length(std::span<const double> x) const;
  std::size_t subsample_size() const { return subsample_size_; }
  std::size_t n_trees() const { return trees_.size(); }

 private:
  std::vector<std::vector<Node>> trees_;
  std::size_t subsample_size_ = 0;
  std::size_t n_features_ = 0;
};

// Average unsuccessful-search path length in a binary search tree of n nodes:
// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(2) = 1 and c(n <= 1) = 0.
double average_path_length(double n);

}  // namespace fraudx
