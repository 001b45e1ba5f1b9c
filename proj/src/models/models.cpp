#include "fraudx/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fraudx/models/classifiers.hpp"
#include "fraudx/models/mlp.hpp"
#include "text_io.hpp"

namespace fraudx {
namespace {

constexpr std::string_view kFormatMagic = "fraudx-model";
constexpr int kFormatVersion = 1;

class CallableModel final : public Model {
 public:
  CallableModel(std::size_t n_features, ScoreSemantics semantics,
                std::function<double(std::span<const double>)> fn)
      : n_features_(n_features), semantics_(semantics), fn_(std::move(fn)) {}

  ModelKind kind() const override { return ModelKind::Custom; }
  ScoreSemantics semantics() const override { return semantics_; }
  std::size_t n_features() const override { return n_features_; }
  double score(std::span<const double> x) const override { return fn_(x); }
  void save_body(std::ostream&) const override {
    throw ModelFormatError("custom score functions cannot be persisted");
  }

 private:
  std::size_t n_features_;
  ScoreSemantics semantics_;
  std::function<double(std::span<const double>)> fn_;
};

template <typename Params>
const Params& params_for(const ModelSpec& spec) {
  const auto* p = std::get_if<Params>(&spec.params);
  if (p == nullptr) {
    throw std::invalid_argument("hyperparameters do not match model kind " +
                                std::string(to_string(spec.kind)));
  }
  return *p;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::NaiveBayes: return "NaiveBayes";
    case ModelKind::LogisticRegression: return "LogisticRegression";
    case ModelKind::DecisionTree: return "DecisionTree";
    case ModelKind::RandomForest: return "RandomForest";
    case ModelKind::GradientBoosting: return "GradientBoosting";
    case ModelKind::NeuralNetwork: return "NeuralNetwork";
    case ModelKind::Autoencoder: return "Autoencoder";
    case ModelKind::IsolationForest: return "IsolationForest";
    case ModelKind::Custom: return "Custom";
  }
  return "Unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (const auto kind : kAllModelKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

bool is_supervised(ModelKind kind) {
  return kind != ModelKind::Autoencoder && kind != ModelKind::IsolationForest &&
         kind != ModelKind::Custom;
}

std::string_view to_string(ScoreSemantics semantics) {
  switch (semantics) {
    case ScoreSemantics::FraudProbability: return "fraud_probability";
    case ScoreSemantics::ReconstructionError: return "reconstruction_error";
    case ScoreSemantics::AnomalyScore: return "anomaly_score";
  }
  return "unknown";
}

ModelSpec ModelSpec::defaults(ModelKind kind, std::uint64_t seed) {
  ModelSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  switch (kind) {
    case ModelKind::NaiveBayes: spec.params = NaiveBayesParams{}; break;
    case ModelKind::LogisticRegression: spec.params = LogisticRegressionParams{}; break;
    case ModelKind::DecisionTree: spec.params = DecisionTreeParams{}; break;
    case ModelKind::RandomForest: spec.params = RandomForestParams{}; break;
    case ModelKind::GradientBoosting: spec.params = GradientBoostingParams{}; break;
    case ModelKind::NeuralNetwork: spec.params = NeuralNetworkParams{}; break;
    case ModelKind::Autoencoder: spec.params = AutoencoderParams{}; break;
    case ModelKind::IsolationForest: spec.params = IsolationForestParams{}; break;
    case ModelKind::Custom: throw std::invalid_argument("custom models have no training defaults");
  }
  return spec;
}

void Model::score_batch(const Matrix& rows, std::span<double> out) const {
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = score(rows.row(i));
}

ScoreFunction::ScoreFunction(std::shared_ptr<const Model> model, double threshold)
    : model_(std::move(model)), threshold_(threshold) {
  if (!model_) throw std::invalid_argument("ScoreFunction needs a model");
}

ScoreFunction ScoreFunction::from_callable(std::size_t n_features, ScoreSemantics semantics,
                                           std::function<double(std::span<const double>)> fn,
                                           double threshold) {
  return {std::make_shared<CallableModel>(n_features, semantics, std::move(fn)), threshold};
}

double contamination_threshold(std::vector<double> scores, double contamination) {
  if (scores.empty()) throw std::invalid_argument("contamination_threshold: no scores");
  if (!(contamination > 0.0 && contamination < 1.0)) {
    throw std::invalid_argument("contamination must lie in (0, 1)");
  }
  std::sort(scores.begin(), scores.end());
  const double position = (1.0 - contamination) * static_cast<double>(scores.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(position));
  const auto hi = std::min(lo + 1, scores.size() - 1);
  const double frac = position - static_cast<double>(lo);
  return scores[lo] + frac * (scores[hi] - scores[lo]);
}

ScoreFunction train(const ModelSpec& spec, const Dataset& train_data) {
  if (train_data.n_rows() == 0) throw TrainingError("no training rows");
  if (is_supervised(spec.kind)) {
    if (!train_data.labels) {
      throw TrainingError(std::string(to_string(spec.kind)) + " is supervised but the data has no labels");
    }
  }
  std::shared_ptr<const Model> model;
  double threshold = 0.5;
  switch (spec.kind) {
    case ModelKind::NaiveBayes:
      model = NaiveBayesModel::fit(params_for<NaiveBayesParams>(spec), train_data, spec.class_weighting);
      break;
    case ModelKind::LogisticRegression:
      model = LogisticRegressionModel::fit(params_for<LogisticRegressionParams>(spec), train_data,
                                           spec.class_weighting);
      break;
    case ModelKind::DecisionTree:
      model = DecisionTreeModel::fit(params_for<DecisionTreeParams>(spec), train_data,
                                     spec.class_weighting);
      break;
    case ModelKind::RandomForest:
      model = RandomForestModel::fit(params_for<RandomForestParams>(spec), train_data, spec.seed,
                                     spec.class_weighting);
      break;
    case ModelKind::GradientBoosting:
      model = GradientBoostingModel::fit(params_for<GradientBoostingParams>(spec), train_data,
                                         spec.class_weighting);
      break;
    case ModelKind::NeuralNetwork:
      model = NeuralNetworkModel::fit(params_for<NeuralNetworkParams>(spec), train_data, spec.seed,
                                      spec.class_weighting);
      break;
    case ModelKind::Autoencoder: {
      const auto& p = params_for<AutoencoderParams>(spec);
      model = AutoencoderModel::fit(p, train_data, spec.seed);
      threshold = contamination_threshold(batch_evaluate(ScoreFunction(model, 0.0), train_data),
                                          p.contamination);
      break;
    }
    case ModelKind::IsolationForest: {
      const auto& p = params_for<IsolationForestParams>(spec);
      model = IsolationForestModel::fit(p, train_data, spec.seed);
      threshold = contamination_threshold(batch_evaluate(ScoreFunction(model, 0.0), train_data),
                                          p.contamination);
      break;
    }
    case ModelKind::Custom:
      throw std::invalid_argument("custom models cannot be trained");
  }
  return {std::move(model), threshold};
}

int predict_binary(const ScoreFunction& sf, std::span<const double> instance) {
  return sf.evaluate(instance) >= sf.threshold() ? 1 : 0;
}

std::vector<double> batch_evaluate(const ScoreFunction& sf, const Dataset& data) {
  if (data.n_rows() > 0 && data.n_features() != sf.n_features()) {
    throw std::invalid_argument("batch_evaluate: data has " + std::to_string(data.n_features()) +
                                " features, model expects " + std::to_string(sf.n_features()));
  }
  std::vector<double> out(data.n_rows());
  sf.evaluate_batch(data.matrix, out);
  return out;
}

void save_model(const ScoreFunction& sf, std::ostream& out) {
  out << kFormatMagic << ' ' << kFormatVersion << "\nkind " << to_string(sf.kind())
      << "\nsemantics " << to_string(sf.semantics()) << "\nthreshold ";
  text_io::write_double(out, sf.threshold());
  out << "\nn_features " << sf.n_features() << '\n';
  sf.model().save_body(out);
  out << "end\n";
}

void save_model(const ScoreFunction& sf, const std::filesystem::path& path) {
  std::ostringstream buffer;
  save_model(sf, buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file: " + path.string());
  out << buffer.str();
}

ScoreFunction load_model(std::istream& in) {
  text_io::expect(in, kFormatMagic);
  const auto version = text_io::read_integer(in);
  if (version != kFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  }
  text_io::expect(in, "kind");
  const auto kind_name = text_io::read_token(in);
  ModelKind kind;
  try {
    kind = parse_model_kind(kind_name);
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(e.what());
  }
  text_io::expect(in, "semantics");
  const auto semantics = text_io::read_token(in);
  text_io::expect(in, "threshold");
  const double threshold = text_io::read_double(in);
  text_io::expect(in, "n_features");
  const auto d = text_io::read_integer(in);
  if (d < 0) throw ModelFormatError("negative feature count");
  const auto n = static_cast<std::size_t>(d);

  std::shared_ptr<const Model> model;
  switch (kind) {
    case ModelKind::NaiveBayes: model = NaiveBayesModel::load_body(in, n); break;
    case ModelKind::LogisticRegression: model = LogisticRegressionModel::load_body(in, n); break;
    case ModelKind::DecisionTree: model = DecisionTreeModel::load_body(in, n); break;
    case ModelKind::RandomForest: model = RandomForestModel::load_body(in, n); break;
    case ModelKind::GradientBoosting: model = GradientBoostingModel::load_body(in, n); break;
    case ModelKind::NeuralNetwork: model = NeuralNetworkModel::load_body(in, n); break;
    case ModelKind::Autoencoder: model = AutoencoderModel::load_body(in, n); break;
    case ModelKind::IsolationForest: model = IsolationForestModel::load_body(in, n); break;
    case ModelKind::Custom: throw ModelFormatError("custom models cannot be loaded");
  }
  text_io::expect(in, "end");
  if (to_string(model->semantics()) != semantics) {
    throw ModelFormatError("semantics '" + semantics + "' do not match model kind " + kind_name);
  }
  return {std::move(model), threshold};
}

ScoreFunction load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  return load_model(in);
}

}  // namespace fraudx
