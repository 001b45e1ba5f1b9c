#include "fraudx/models/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fraudx/models/classifiers.hpp"
#include "text_io.hpp"

namespace fraudx {
namespace {

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double softplus(double m) { return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

}  // namespace

Mlp::Mlp(std::size_t n_in, const std::vector<int>& hidden, std::size_t n_out, Head head,
         std::uint64_t seed)
    : head_(head), input_mean_(n_in, 0.0), input_scale_(n_in, 1.0) {
  std::mt19937_64 rng(seed);
  std::size_t prev = n_in;
  std::vector<std::size_t> sizes;
  for (const int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden layer sizes must be positive");
    sizes.push_back(static_cast<std::size_t>(h));
  }
  sizes.push_back(n_out);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    Layer layer;
    layer.n_in = prev;
    layer.n_out = sizes[l];
    const bool output = l + 1 == sizes.size();
    // He for ReLU layers, LeCun for the output layer.
    const double sd = std::sqrt((output ? 1.0 : 2.0) / static_cast<double>(std::max<std::size_t>(prev, 1)));
    std::normal_distribution<double> init(0.0, sd);
    layer.weights.resize(layer.n_in * layer.n_out);
    for (auto& w : layer.weights) w = init(rng);
    layer.bias.assign(layer.n_out, 0.0);
    layers_.push_back(std::move(layer));
    prev = sizes[l];
  }
}

void Mlp::set_input_scaling(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != scale.size()) throw std::invalid_argument("input scaling size mismatch");
  input_mean_ = std::move(mean);
  input_scale_ = std::move(scale);
}

void Mlp::fit_input_scaling(const Matrix& x) {
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) mean[j] += x(i, j);
    mean[j] /= static_cast<double>(std::max<std::size_t>(x.rows(), 1));
    for (std::size_t i = 0; i < x.rows(); ++i) scale[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
    scale[j] = std::sqrt(scale[j] / static_cast<double>(std::max<std::size_t>(x.rows(), 1)));
    if (!(scale[j] > 0.0)) scale[j] = 1.0;
  }
  set_input_scaling(std::move(mean), std::move(scale));
}

void Mlp::standardize(std::span<const double> raw, std::span<double> out) const {
  for (std::size_t j = 0; j < input_mean_.size(); ++j) {
    out[j] = (raw[j] - input_mean_[j]) / input_scale_[j];
  }
}

void Mlp::forward(std::span<const double> raw, std::vector<double>& output) const {
  std::vector<double> current(input_mean_.size()), next;
  standardize(raw, current);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    next.assign(layer.n_out, 0.0);
    for (std::size_t o = 0; o < layer.n_out; ++o) {
      double a = layer.bias[o];
      const double* w = layer.weights.data() + o * layer.n_in;
      for (std::size_t i = 0; i < layer.n_in; ++i) a += w[i] * current[i];
      const bool hidden = l + 1 < layers_.size();
      next[o] = hidden ? std::max(a, 0.0) : a;
    }
    current.swap(next);
  }
  if (head_ == Head::SigmoidCrossEntropy) {
    for (auto& v : current) v = sigmoid(v);
  }
  output = std::move(current);
}

std::size_t Mlp::n_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> flat;
  flat.reserve(n_parameters());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void Mlp::set_parameters(std::span<const double> flat) {
  if (flat.size() != n_parameters()) throw std::invalid_argument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& layer : layers_) {
    for (auto& w : layer.weights) w = flat[k++];
    for (auto& b : layer.bias) b = flat[k++];
  }
}

double Mlp::loss_and_gradient(const Matrix& x, std::span<const std::size_t> rows,
                              std::span<const double> targets, std::span<const double> weights,
                              std::vector<double>& gradient) const {
  const std::size_t n_layers = layers_.size();
  gradient.assign(n_parameters(), 0.0);
  std::vector<std::size_t> offset(n_layers);
  for (std::size_t l = 0, k = 0; l < n_layers; ++l) {
    offset[l] = k;
    k += layers_[l].weights.size() + layers_[l].bias.size();
  }

  // activations[0] is the standardized input; activations[l + 1] the output of
  // layer l (post-ReLU for hidden layers, raw for the output layer).
  std::vector<std::vector<double>> activations(n_layers + 1);
  activations[0].resize(input_mean_.size());
  for (std::size_t l = 0; l < n_layers; ++l) activations[l + 1].resize(layers_[l].n_out);
  std::vector<double> delta, delta_prev;

  double total_loss = 0.0;
  double total_weight = 0.0;
  for (const auto row : rows) {
    const double w = weights.empty() ? 1.0 : weights[row];
    total_weight += w;
    standardize(x.row(row), activations[0]);
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto& layer = layers_[l];
      const auto& in = activations[l];
      auto& out = activations[l + 1];
      for (std::size_t o = 0; o < layer.n_out; ++o) {
        double a = layer.bias[o];
        const double* wr = layer.weights.data() + o * layer.n_in;
        for (std::size_t i = 0; i < layer.n_in; ++i) a += wr[i] * in[i];
        out[o] = l + 1 < n_layers ? std::max(a, 0.0) : a;
      }
    }

    const auto& output = activations[n_layers];
    delta.assign(output.size(), 0.0);
    if (head_ == Head::SigmoidCrossEntropy) {
      const double z = output[0];
      const double y = targets[row];
      total_loss += w * (softplus(z) - y * z);
      delta[0] = w * (sigmoid(z) - y);
    } else {
      const auto& input = activations[0];
      const auto m = static_cast<double>(output.size());
      double sq = 0.0;
      for (std::size_t j = 0; j < output.size(); ++j) {
        const double r = output[j] - input[j];
        sq += r * r;
        delta[j] = w * 2.0 * r / m;
      }
      total_loss += w * sq / m;
    }

    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& layer = layers_[l];
      const auto& in = activations[l];
      double* gw = gradient.data() + offset[l];
      double* gb = gw + layer.weights.size();
      for (std::size_t o = 0; o < layer.n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* gwr = gw + o * layer.n_in;
        for (std::size_t i = 0; i < layer.n_in; ++i) gwr[i] += d * in[i];
        gb[o] += d;
      }
      if (l == 0) break;
      delta_prev.assign(layer.n_in, 0.0);
      for (std::size_t o = 0; o < layer.n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* wr = layer.weights.data() + o * layer.n_in;
        for (std::size_t i = 0; i < layer.n_in; ++i) delta_prev[i] += wr[i] * d;
      }
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        if (!(in[i] > 0.0)) delta_prev[i] = 0.0;  // ReLU gate
      }
      delta.swap(delta_prev);
    }
  }
  if (total_weight > 0.0) {
    for (auto& g : gradient) g /= total_weight;
    total_loss /= total_weight;
  }
  return total_loss;
}

void Mlp::train(const Matrix& x, std::span<const double> targets, std::span<const double> weights,
                const MlpParams& params, std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (n == 0) throw TrainingError("neural network: no training rows");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> theta = parameters();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), gradient;
  const auto batch = static_cast<std::size_t>(std::max(1, params.batch_size));
  long long step = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const std::size_t stop = std::min(n, start + batch);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const double loss = loss_and_gradient(x, rows, targets, weights, gradient);
      if (!std::isfinite(loss)) {
        throw TrainingError("neural network: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(b));
      }
      ++step;
      const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = params.beta1 * m[k] + (1.0 - params.beta1) * gradient[k];
        v[k] = params.beta2 * v[k] + (1.0 - params.beta2) * gradient[k] * gradient[k];
        theta[k] -= params.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + params.epsilon);
      }
      set_parameters(theta);
    }
  }
}

void Mlp::save(std::ostream& out) const {
  out << "mlp " << (head_ == Head::SigmoidCrossEntropy ? "sigmoid" : "linear") << ' '
      << layers_.size() << '\n';
  text_io::write_vector(out, input_mean_);
  text_io::write_vector(out, input_scale_);
  for (const auto& layer : layers_) {
    out << "layer " << layer.n_in << ' ' << layer.n_out << '\n';
    text_io::write_vector(out, layer.weights);
    text_io::write_vector(out, layer.bias);
  }
}

Mlp Mlp::load(std::istream& in) {
  Mlp net;
  text_io::expect(in, "mlp");
  const auto head = text_io::read_token(in);
  if (head == "sigmoid") {
    net.head_ = Head::SigmoidCrossEntropy;
  } else if (head == "linear") {
    net.head_ = Head::LinearSquaredError;
  } else {
    throw ModelFormatError("mlp: unknown head '" + head + "'");
  }
  const auto n_layers = text_io::read_integer(in);
  if (n_layers <= 0) throw ModelFormatError("mlp: no layers");
  net.input_mean_ = text_io::read_vector(in);
  net.input_scale_ = text_io::read_vector(in);
  if (net.input_mean_.size() != net.input_scale_.size()) throw ModelFormatError("mlp: scaling size");
  std::size_t prev = net.input_mean_.size();
  for (long long l = 0; l < n_layers; ++l) {
    text_io::expect(in, "layer");
    Layer layer;
    layer.n_in = static_cast<std::size_t>(text_io::read_integer(in));
    layer.n_out = static_cast<std::size_t>(text_io::read_integer(in));
    layer.weights = text_io::read_vector(in);
    layer.bias = text_io::read_vector(in);
    if (layer.n_in != prev || layer.weights.size() != layer.n_in * layer.n_out ||
        layer.bias.size() != layer.n_out) {
      throw ModelFormatError("mlp: layer shape mismatch");
    }
    prev = layer.n_out;
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

// ---------------------------------------------------------------------------

std::shared_ptr<NeuralNetworkModel> NeuralNetworkModel::fit(const NeuralNetworkParams& params,
                                                            const Dataset& data, std::uint64_t seed,
                                                            bool class_weighting) {
  Mlp net(data.n_features(), params.mlp.hidden, 1, Mlp::Head::SigmoidCrossEntropy,
          derive_seed(seed, 0));
  net.fit_input_scaling(data.matrix);
  const std::vector<double> targets(data.labels->begin(), data.labels->end());
  std::vector<double> weights;
  if (class_weighting) weights = training_weights(*data.labels, true);
  net.train(data.matrix, targets, weights, params.mlp, derive_seed(seed, 1));
  return std::make_shared<NeuralNetworkModel>(std::move(net));
}

double NeuralNetworkModel::score(std::span<const double> x) const {
  std::vector<double> out;
  net_.forward(x, out);
  return out[0];
}

void NeuralNetworkModel::save_body(std::ostream& out) const { net_.save(out); }

std::shared_ptr<NeuralNetworkModel> NeuralNetworkModel::load_body(std::istream& in,
                                                                  std::size_t n_features) {
  auto net = Mlp::load(in);
  if (net.n_inputs() != n_features || net.n_outputs() != 1 ||
      net.head() != Mlp::Head::SigmoidCrossEntropy) {
    throw ModelFormatError("neural network: shape mismatch");
  }
  return std::make_shared<NeuralNetworkModel>(std::move(net));
}

std::shared_ptr<AutoencoderModel> AutoencoderModel::fit(const AutoencoderParams& params,
                                                        const Dataset& data, std::uint64_t seed) {
  Mlp net(data.n_features(), params.mlp.hidden, data.n_features(), Mlp::Head::LinearSquaredError,
          derive_seed(seed, 0));
  net.fit_input_scaling(data.matrix);
  net.train(data.matrix, {}, {}, params.mlp, derive_seed(seed, 1));
  return std::make_shared<AutoencoderModel>(std::move(net));
}

double AutoencoderModel::score(std::span<const double> x) const {
  std::vector<double> reconstruction;
  net_.forward(x, reconstruction);
  std::vector<double> z(net_.n_inputs());
  net_.standardize(x, z);
  double sq = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double r = reconstruction[j] - z[j];
    sq += r * r;
  }
  return sq / static_cast<double>(z.size());
}

void AutoencoderModel::save_body(std::ostream& out) const { net_.save(out); }

std::shared_ptr<AutoencoderModel> AutoencoderModel::load_body(std::istream& in,
                                                              std::size_t n_features) {
  auto net = Mlp::load(in);
  if (net.n_inputs() != n_features || net.n_outputs() != n_features ||
      net.head() != Mlp::Head::LinearSquaredError) {
    throw ModelFormatError("autoencoder: shape mismatch");
  }
  return std::make_shared<AutoencoderModel>(std::move(net));
}

}  // namespace fraudx
