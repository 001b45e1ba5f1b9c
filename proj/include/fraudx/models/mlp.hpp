#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <span>
#include <vector>

#include "fraudx/models.hpp"

namespace fraudx {

// Fully connected ReLU network with either a sigmoid/cross-entropy head
// (one output) or a linear/mean-squared-error head (reconstruction). Inputs
// are standardized internally with statistics fitted on the training rows.
class Mlp {
 public:
  enum class Head { SigmoidCrossEntropy, LinearSquaredError };

  struct Layer {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<double> weights;  // n_out x n_in, row-major
    std::vector<double> bias;
  };

  Mlp() = default;
  // He-initialized layers n_in -> hidden... -> n_out.
  Mlp(std::size_t n_in, const std::vector<int>& hidden, std::size_t n_out, Head head,
      std::uint64_t seed);

  Head head() const { return head_; }
  std::size_t n_inputs() const { return input_mean_.size(); }
  std::size_t n_outputs() const { return layers_.empty() ? 0 : layers_.back().n_out; }
  const std::vector<Layer>& layers() const { return layers_; }

  void set_input_scaling(std::vector<double> mean, std::vector<double> scale);
  void fit_input_scaling(const Matrix& x);
  // Standardized copy of one raw input row.
  void standardize(std::span<const double> raw, std::span<double> out) const;

  // Output-layer values for one raw input: sigmoid probability for the
  // classifier head, reconstruction (standardized space) for the other.
  void forward(std::span<const double> raw, std::vector<double>& output) const;

  // Mean loss over the batch and its gradient w.r.t. the flat parameter
  // vector. `targets` has one column (labels) for the classifier head and is
  // ignored for the reconstruction head. `weights` may be empty.
  double loss_and_gradient(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<const double> targets, std::span<const double> weights,
                           std::vector<double>& gradient) const;

  std::size_t n_parameters() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

  // Adam over shuffled mini-batches. Throws TrainingError on a non-finite
  // loss, naming the epoch and batch.
  void train(const Matrix& x, std::span<const double> targets, std::span<const double> weights,
             const MlpParams& params, std::uint64_t seed);

 private:
  Head head_ = Head::SigmoidCrossEntropy;
  std::vector<Layer> layers_;
  std::vector<double> input_mean_;
  std::vector<double> input_scale_;
};

class NeuralNetworkModel final : public Model {
 public:
  static std::shared_ptr<NeuralNetworkModel> fit(const NeuralNetworkParams& params,
                                                 const Dataset& data, std::uint64_t seed,
                                                 bool class_weighting);
  static std::shared_ptr<NeuralNetworkModel> load_body(std::istream& in, std::size_t n_features);
  explicit NeuralNetworkModel(Mlp net) : net_(std::move(net)) {}

  ModelKind kind() const override { return ModelKind::NeuralNetwork; }
  ScoreSemantics semantics() const override { return ScoreSemantics::FraudProbability; }
  std::size_t n_features() const override { return net_.n_inputs(); }
  double score(std::span<const double> x) const override;
  void save_body(std::ostream& out) const override;

  const Mlp& network() const { return net_; }

 private:
  Mlp net_;
};

// Score = mean squared reconstruction residual in the standardized input space.
class AutoencoderModel final : public Model {
 public:
  static std::shared_ptr<AutoencoderModel> fit(const AutoencoderParams& params,
                                               const Dataset& data, std::uint64_t seed);
  static std::shared_ptr<AutoencoderModel> load_body(std::istream& in, std::size_t n_features);
  explicit AutoencoderModel(Mlp net) : net_(std::move(net)) {}

  ModelKind kind() const override { return ModelKind::Autoencoder; }
  ScoreSemantics semantics() const override { return ScoreSemantics::ReconstructionError; }
  std::size_t n_features() const override { return net_.n_inputs(); }
  double score(std::span<const double> x) const override;
  void save_body(std::ostream& out) const override;

  const Mlp& network() const { return net_; }

 private:
  Mlp net_;
};

}  // namespace fraudx
