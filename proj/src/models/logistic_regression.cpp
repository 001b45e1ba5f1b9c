#include <cmath>

#include "fraudx/models/classifiers.hpp"
#include "text_io.hpp"

namespace fraudx {
namespace {

double softplus(double m) { return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// Penalized mean log loss over standardized features. theta[0] is the
// intercept (unpenalized), theta[1..d] the slopes.
class Objective {
 public:
  Objective(const Matrix& z, const std::vector<int>& y, const std::vector<double>& w, double l2)
      : z_(z), y_(y), w_(w), l2_(l2) {
    for (const double wi : w) total_weight_ += wi;
  }

  double value(const std::vector<double>& theta) const {
    double loss = 0.0;
    for (std::size_t i = 0; i < z_.rows(); ++i) {
      const double m = margin(theta, i);
      loss += w_[i] * (softplus(m) - y_[i] * m);
    }
    loss /= total_weight_;
    double penalty = 0.0;
    for (std::size_t j = 1; j < theta.size(); ++j) penalty += theta[j] * theta[j];
    return loss + 0.5 * l2_ * penalty;
  }

  void gradient(const std::vector<double>& theta, std::vector<double>& g) const {
    g.assign(theta.size(), 0.0);
    for (std::size_t i = 0; i < z_.rows(); ++i) {
      const double r = w_[i] * (sigmoid(margin(theta, i)) - y_[i]);
      g[0] += r;
      const auto row = z_.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g[j + 1] += r * row[j];
    }
    for (std::size_t j = 0; j < g.size(); ++j) g[j] /= total_weight_;
    for (std::size_t j = 1; j < g.size(); ++j) g[j] += l2_ * theta[j];
  }

 private:
  double margin(const std::vector<double>& theta, std::size_t i) const {
    double m = theta[0];
    const auto row = z_.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) m += theta[j + 1] * row[j];
    return m;
  }

  const Matrix& z_;
  const std::vector<int>& y_;
  const std::vector<double>& w_;
  double l2_;
  double total_weight_ = 0.0;
};

}  // namespace

std::shared_ptr<LogisticRegressionModel> LogisticRegressionModel::fit(
    const LogisticRegressionParams& params, const Dataset& data, bool class_weighting) {
  const std::size_t n = data.n_rows();
  const std::size_t d = data.n_features();
  const auto& labels = *data.labels;
  const auto weights = training_weights(labels, class_weighting);

  // Optimize in standardized coordinates, report in encoded units.
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += data.matrix(i, j);
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      sd[j] += (data.matrix(i, j) - mean[j]) * (data.matrix(i, j) - mean[j]);
    }
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
  }
  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      z(i, j) = sd[j] > 0.0 ? (data.matrix(i, j) - mean[j]) / sd[j] : 0.0;
    }
  }

  const Objective objective(z, labels, weights, params.l2);
  std::vector<double> theta(d + 1, 0.0), g, candidate(d + 1);
  double f = objective.value(theta);
  double step = 1.0;
  int iteration = 0;
  for (; iteration < params.max_iter; ++iteration) {
    objective.gradient(theta, g);
    double g2 = 0.0;
    for (const double gj : g) g2 += gj * gj;
    if (std::sqrt(g2) < params.tolerance) break;

    step = std::min(step * 2.0, 1e4);
    double f_new = f;
    for (int halving = 0; halving < 80; ++halving) {
      for (std::size_t j = 0; j < theta.size(); ++j) candidate[j] = theta[j] - step * g[j];
      f_new = objective.value(candidate);
      if (!std::isfinite(f_new)) {
        step *= 0.5;
        continue;
      }
      if (f_new <= f - 0.5 * step * g2) break;
      step *= 0.5;
    }
    if (!std::isfinite(f_new)) {
      throw TrainingError("logistic regression: non-finite loss at iteration " +
                          std::to_string(iteration));
    }
    theta.swap(candidate);
    f = f_new;
  }

  std::vector<double> coefficients(d, 0.0);
  double intercept = theta[0];
  for (std::size_t j = 0; j < d; ++j) {
    if (sd[j] > 0.0) {
      coefficients[j] = theta[j + 1] / sd[j];
      intercept -= coefficients[j] * mean[j];
    }
  }
  auto model = std::make_shared<LogisticRegressionModel>(std::move(coefficients), intercept);
  model->iterations_ = iteration;
  return model;
}

double LogisticRegressionModel::score(std::span<const double> x) const {
  double m = intercept_;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) m += coefficients_[j] * x[j];
  return sigmoid(m);
}

void LogisticRegressionModel::save_body(std::ostream& out) const {
  out << "intercept ";
  text_io::write_double(out, intercept_);
  out << "\ncoefficients ";
  text_io::write_vector(out, coefficients_);
}

std::shared_ptr<LogisticRegressionModel> LogisticRegressionModel::load_body(
    std::istream& in, std::size_t n_features) {
  text_io::expect(in, "intercept");
  const double intercept = text_io::read_double(in);
  text_io::expect(in, "coefficients");
  auto coefficients = text_io::read_vector(in);
  if (coefficients.size() != n_features) {
    throw ModelFormatError("logistic regression: coefficient count mismatch");
  }
  return std::make_shared<LogisticRegressionModel>(std::move(coefficients), intercept);
}

}  // namespace fraudx
