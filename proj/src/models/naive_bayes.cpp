#include <algorithm>
#include <cmath>
#include <numbers>

#include "fraudx/models/classifiers.hpp"
#include "text_io.hpp"

namespace fraudx {

std::vector<double> training_weights(const std::vector<int>& labels, bool class_weighting) {
  std::vector<double> w(labels.size(), 1.0);
  if (!class_weighting) return w;
  double count[2] = {0.0, 0.0};
  for (const int y : labels) count[y] += 1.0;
  const auto n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double c = count[labels[i]];
    w[i] = c > 0.0 ? n / (2.0 * c) : 1.0;
  }
  return w;
}

namespace {

std::size_t code_index(double value, std::size_t n_codes) {
  const double r = std::round(value);
  if (!(r >= 0.0) || r >= static_cast<double>(n_codes)) return 0;
  return static_cast<std::size_t>(r);
}

}  // namespace

std::shared_ptr<NaiveBayesModel> NaiveBayesModel::fit(const NaiveBayesParams& params,
                                                      const Dataset& data, bool class_weighting) {
  const std::size_t d = data.n_features();
  const auto& labels = *data.labels;
  const auto weights = training_weights(labels, class_weighting);
  auto model = std::make_shared<NaiveBayesModel>();
  model->categorical_.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    model->categorical_[j] = data.schema && data.schema->is_categorical(j);
  }

  double class_weight[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < labels.size(); ++i) class_weight[labels[i]] += weights[i];
  const double total = class_weight[0] + class_weight[1];

  // Largest overall variance among numeric columns, for variance smoothing.
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (model->categorical_[j]) continue;
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) mean += data.matrix(i, j);
    mean /= static_cast<double>(data.n_rows());
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      sq += (data.matrix(i, j) - mean) * (data.matrix(i, j) - mean);
    }
    max_var = std::max(max_var, sq / static_cast<double>(data.n_rows()));
  }
  const double epsilon = std::max(params.var_smoothing * max_var, 1e-12);

  for (int c = 0; c < 2; ++c) {
    model->present_[c] = class_weight[c] > 0.0;
    model->log_prior_[c] = model->present_[c] ? std::log(class_weight[c] / total) : 0.0;
    model->mean_[c].assign(d, 0.0);
    model->var_[c].assign(d, 1.0);
    model->log_prob_[c].assign(d, {});
    if (!model->present_[c]) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (model->categorical_[j]) {
        std::size_t n_codes = data.schema ? data.schema->columns[j].categories.size() : 0;
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
          n_codes = std::max(n_codes, static_cast<std::size_t>(std::max(0.0, std::round(data.matrix(i, j)))) + 1);
        }
        std::vector<double> counts(n_codes, 0.0);
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
          if (labels[i] == c) counts[code_index(data.matrix(i, j), n_codes)] += weights[i];
        }
        auto& lp = model->log_prob_[c][j];
        lp.resize(n_codes);
        const double denom = class_weight[c] + params.alpha * static_cast<double>(n_codes);
        for (std::size_t k = 0; k < n_codes; ++k) lp[k] = std::log((counts[k] + params.alpha) / denom);
      } else {
        double mean = 0.0;
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
          if (labels[i] == c) mean += weights[i] * data.matrix(i, j);
        }
        mean /= class_weight[c];
        double var = 0.0;
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
          if (labels[i] == c) var += weights[i] * (data.matrix(i, j) - mean) * (data.matrix(i, j) - mean);
        }
        model->mean_[c][j] = mean;
        model->var_[c][j] = var / class_weight[c] + epsilon;
      }
    }
  }
  return model;
}

double NaiveBayesModel::score(std::span<const double> x) const {
  if (!present_[1]) return 0.0;
  if (!present_[0]) return 1.0;
  double joint[2];
  for (int c = 0; c < 2; ++c) {
    double l = log_prior_[c];
    for (std::size_t j = 0; j < categorical_.size(); ++j) {
      if (categorical_[j]) {
        const auto& lp = log_prob_[c][j];
        l += lp[code_index(x[j], lp.size())];
      } else {
        const double diff = x[j] - mean_[c][j];
        l += -0.5 * std::log(2.0 * std::numbers::pi * var_[c][j]) - 0.5 * diff * diff / var_[c][j];
      }
    }
    joint[c] = l;
  }
  return 1.0 / (1.0 + std::exp(joint[0] - joint[1]));
}

void NaiveBayesModel::save_body(std::ostream& out) const {
  const std::size_t d = categorical_.size();
  out << "categorical";
  for (const char c : categorical_) out << ' ' << static_cast<int>(c);
  out << '\n';
  for (int c = 0; c < 2; ++c) {
    out << "class " << c << ' ' << static_cast<int>(present_[c]) << ' ';
    text_io::write_double(out, log_prior_[c]);
    out << '\n';
    text_io::write_vector(out, mean_[c]);
    text_io::write_vector(out, var_[c]);
    for (std::size_t j = 0; j < d; ++j) text_io::write_vector(out, log_prob_[c][j]);
  }
}

std::shared_ptr<NaiveBayesModel> NaiveBayesModel::load_body(std::istream& in,
                                                            std::size_t n_features) {
  auto model = std::make_shared<NaiveBayesModel>();
  text_io::expect(in, "categorical");
  model->categorical_.resize(n_features);
  for (auto& c : model->categorical_) c = static_cast<char>(text_io::read_integer(in));
  for (int c = 0; c < 2; ++c) {
    text_io::expect(in, "class");
    if (text_io::read_integer(in) != c) throw ModelFormatError("naive bayes: class order");
    model->present_[c] = text_io::read_integer(in) != 0;
    model->log_prior_[c] = text_io::read_double(in);
    model->mean_[c] = text_io::read_vector(in);
    model->var_[c] = text_io::read_vector(in);
    if (model->mean_[c].size() != n_features || model->var_[c].size() != n_features) {
      throw ModelFormatError("naive bayes: parameter size mismatch");
    }
    model->log_prob_[c].resize(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
      model->log_prob_[c][j] = text_io::read_vector(in);
      if (model->categorical_[j] && model->present_[c] && model->log_prob_[c][j].empty()) {
        throw ModelFormatError("naive bayes: empty categorical table");
      }
    }
  }
  return model;
}

}  // namespace fraudx
