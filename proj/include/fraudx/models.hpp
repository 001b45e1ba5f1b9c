#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fraudx/ingest.hpp"
#include "fraudx/matrix.hpp"

namespace fraudx {

enum class ModelKind {
  NaiveBayes,
  LogisticRegression,
  DecisionTree,
  RandomForest,
  GradientBoosting,
  NeuralNetwork,
  Autoencoder,
  IsolationForest,
  Custom,  // ad-hoc score functions (tests, adapters); never trained or persisted
};

inline constexpr std::array<ModelKind, 8> kAllModelKinds = {
    ModelKind::NaiveBayes,       ModelKind::LogisticRegression, ModelKind::DecisionTree,
    ModelKind::RandomForest,     ModelKind::GradientBoosting,   ModelKind::NeuralNetwork,
    ModelKind::Autoencoder,      ModelKind::IsolationForest,
};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
bool is_supervised(ModelKind kind);

enum class ScoreSemantics { FraudProbability, ReconstructionError, AnomalyScore };
std::string_view to_string(ScoreSemantics semantics);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hyperparameters. Defaults follow the published setup where one exists.

struct NaiveBayesParams {
  double alpha = 1.0;            // Laplace smoothing for categorical columns
  double var_smoothing = 1e-9;   // fraction of the largest variance added to all
};

struct LogisticRegressionParams {
  double l2 = 1e-4;
  int max_iter = 500;
  double tolerance = 1e-6;  // on the gradient norm
};

struct DecisionTreeParams {
  int max_depth = 8;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
};

struct RandomForestParams {
  int n_estimators = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 = floor(sqrt(d))
};

struct GradientBoostingParams {
  int n_estimators = 100;
  int max_depth = 12;
  double learning_rate = 0.002;
  int min_samples_leaf = 1;
  double l2_leaf = 0.0;
};

// Shared by the classifier and the autoencoder: ReLU hidden layers, Adam.
struct MlpParams {
  std::vector<int> hidden = {50, 50, 50};
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 128;
  int epochs = 30;
};

struct NeuralNetworkParams {
  MlpParams mlp;
};

struct AutoencoderParams {
  MlpParams mlp;
  double contamination = 0.035;  // threshold at the (1 - c) training quantile
};

struct IsolationForestParams {
  int n_estimators = 100;
  int max_samples = 256;
  double contamination = 0.035;
};

using Hyperparameters =
    std::variant<NaiveBayesParams, LogisticRegressionParams, DecisionTreeParams,
                 RandomForestParams, GradientBoostingParams, NeuralNetworkParams,
                 AutoencoderParams, IsolationForestParams>;

struct ModelSpec {
  ModelKind kind = ModelKind::LogisticRegression;
  Hyperparameters params;
  std::uint64_t seed = 0;
  // Reweights classes to equal total weight. Off for reproduction runs.
  bool class_weighting = false;

  static ModelSpec defaults(ModelKind kind, std::uint64_t seed = 0);
};

// ---------------------------------------------------------------------------
// Trained models.

class Model {
 public:
  virtual ~Model() = default;
  virtual ModelKind kind() const = 0;
  virtual ScoreSemantics semantics() const = 0;
  virtual std::size_t n_features() const = 0;
  // Larger is more fraudulent / anomalous for every semantics.
  virtual double score(std::span<const double> x) const = 0;
  // Must equal score() row by row, bit for bit.
  virtual void score_batch(const Matrix& rows, std::span<double> out) const;
  virtual void save_body(std::ostream& out) const = 0;
};

// Uniform view of a trained model: x -> real score plus a decision threshold.
// Cheap to copy; copies share the immutable model.
class ScoreFunction {
 public:
  ScoreFunction(std::shared_ptr<const Model> model, double threshold);

  static ScoreFunction from_callable(std::size_t n_features, ScoreSemantics semantics,
                                     std::function<double(std::span<const double>)> fn,
                                     double threshold = 0.5);

  ModelKind kind() const { return model_->kind(); }
  ScoreSemantics semantics() const { return model_->semantics(); }
  std::size_t n_features() const { return model_->n_features(); }
  double threshold() const { return threshold_; }
  const Model& model() const { return *model_; }
  std::shared_ptr<const Model> model_ptr() const { return model_; }

  double evaluate(std::span<const double> x) const { return model_->score(x); }
  void evaluate_batch(const Matrix& rows, std::span<double> out) const {
    model_->score_batch(rows, out);
  }
  ScoreFunction with_threshold(double threshold) const { return {model_, threshold}; }

 private:
  std::shared_ptr<const Model> model_;
  double threshold_;
};

// Deterministic for a fixed spec (including seed) and data.
ScoreFunction train(const ModelSpec& spec, const Dataset& train_data);

// 1 iff evaluate(x) >= threshold.
int predict_binary(const ScoreFunction& sf, std::span<const double> instance);

std::vector<double> batch_evaluate(const ScoreFunction& sf, const Dataset& data);

// (1 - contamination) quantile of the scores, linear interpolation.
double contamination_threshold(std::vector<double> scores, double contamination);

// Versioned text format; doubles are written as hexadecimal floats so a
// save/load round trip is exact.
void save_model(const ScoreFunction& sf, std::ostream& out);
void save_model(const ScoreFunction& sf, const std::filesystem::path& path);
ScoreFunction load_model(std::istream& in);
ScoreFunction load_model(const std::filesystem::path& path);

}  // namespace fraudx
