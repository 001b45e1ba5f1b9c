#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fraudx/explain.hpp"

namespace fraudx {
namespace {

double weighted_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& w) {
  const double wsum = w.sum();
  const double ma = w.dot(a) / wsum;
  const double mb = w.dot(b) / wsum;
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double cov = (w.array() * da * db).sum();
  const double va = (w.array() * da * da).sum();
  const double vb = (w.array() * db * db).sum();
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace

Attribution lime(const ScoreFunction& sf, std::span<const double> instance,
                 const Dataset& train_data, const LimeOptions& options) {
  if (sf.semantics() != ScoreSemantics::FraudProbability) {
    throw ExplainError("LIME is only available for models that output a fraud probability; " +
                       std::string(to_string(sf.kind())) + " scores are " +
                       std::string(to_string(sf.semantics())));
  }
  if (train_data.n_rows() == 0) throw ExplainError("LIME needs nonempty training data");
  const std::size_t m = instance.size();
  if (m != sf.n_features() || m != train_data.n_features()) {
    throw ExplainError("instance, model and training data disagree on the feature count");
  }
  if (options.n_perturbations < 2) throw ExplainError("LIME needs at least 2 perturbations");
  const std::size_t n = options.n_perturbations;

  std::vector<bool> categorical(m, false);
  if (train_data.schema) {
    for (std::size_t j = 0; j < m; ++j) categorical[j] = train_data.schema->is_categorical(j);
  }

  // Per-feature sampling laws from the training data.
  std::vector<double> stddev(m, 1.0);
  std::vector<std::vector<double>> code_values(m);
  std::vector<std::discrete_distribution<std::size_t>> code_law(m);
  const auto rows = static_cast<double>(train_data.n_rows());
  for (std::size_t j = 0; j < m; ++j) {
    if (categorical[j]) {
      std::vector<double> codes;
      for (std::size_t r = 0; r < train_data.n_rows(); ++r) codes.push_back(train_data.matrix(r, j));
      std::sort(codes.begin(), codes.end());
      std::vector<double> counts;
      for (std::size_t r = 0; r < codes.size();) {
        std::size_t e = r;
        while (e < codes.size() && codes[e] == codes[r]) ++e;
        code_values[j].push_back(codes[r]);
        counts.push_back(static_cast<double>(e - r));
        r = e;
      }
      code_law[j] = std::discrete_distribution<std::size_t>(counts.begin(), counts.end());
    } else {
      double mean = 0.0;
      for (std::size_t r = 0; r < train_data.n_rows(); ++r) mean += train_data.matrix(r, j);
      mean /= rows;
      double var = 0.0;
      for (std::size_t r = 0; r < train_data.n_rows(); ++r) {
        const double d = train_data.matrix(r, j) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / rows);
      stddev[j] = sd > 0.0 ? sd : 1.0;
    }
  }

  // Row 0 is the instance itself. `u` is the surrogate representation:
  // numeric (z - x) / std, categorical [z == x].
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix perturbed(n, m);
  Eigen::MatrixXd u(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    perturbed(0, j) = instance[j];
    u(0, static_cast<Eigen::Index>(j)) = categorical[j] ? 1.0 : 0.0;
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (categorical[j]) {
        const double code = code_values[j][code_law[j](rng)];
        perturbed(i, j) = code;
        u(ii, jj) = code == instance[j] ? 1.0 : 0.0;
      } else {
        const double step = gauss(rng);
        perturbed(i, j) = instance[j] + stddev[j] * step;
        u(ii, jj) = step;
      }
    }
  }

  std::vector<double> outputs(n);
  sf.evaluate_batch(perturbed, outputs);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outputs.data(), static_cast<Eigen::Index>(n));
  if (y.maxCoeff() == y.minCoeff()) {
    throw ExplainError("LIME surrogate is degenerate: all " + std::to_string(n) +
                       " perturbation outputs equal " + std::to_string(y(0)));
  }

  const double width = options.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(m)));
  if (!(width > 0.0)) throw ExplainError("LIME kernel width must be positive");
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double d2 = (u.row(ii) - u.row(0)).squaredNorm();
    w(ii) = std::exp(-d2 / (width * width));
  }

  // Feature selection by |weighted correlation| with the output.
  std::vector<double> score(m);
  for (std::size_t j = 0; j < m; ++j) {
    score[j] = std::abs(weighted_correlation(u.col(static_cast<Eigen::Index>(j)), y, w));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  const std::size_t k = std::min(options.top_k, m);
  std::vector<std::size_t> selected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(selected.begin(), selected.end());

  // Weighted ridge with an unpenalized intercept, solved on centered data.
  const double wsum = w.sum();
  Eigen::MatrixXd x(n, k);
  for (std::size_t c = 0; c < k; ++c) x.col(static_cast<Eigen::Index>(c)) = u.col(static_cast<Eigen::Index>(selected[c]));
  const Eigen::RowVectorXd x_mean = (w.transpose() * x) / wsum;
  const double y_mean = w.dot(y) / wsum;
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd gram = xc.transpose() * w.asDiagonal() * xc;
  gram.diagonal().array() += options.ridge;
  const Eigen::VectorXd beta = gram.ldlt().solve(xc.transpose() * (w.asDiagonal() * yc));
  const double intercept = y_mean - x_mean.dot(beta);

  Attribution attr;
  attr.method = ExplainMethod::Lime;
  attr.feature_names = train_data.schema ? train_data.schema->feature_names()
                                         : std::vector<std::string>{};
  if (attr.feature_names.size() != m) {
    attr.feature_names.resize(m);
    for (std::size_t j = 0; j < m; ++j) attr.feature_names[j] = "f" + std::to_string(j);
  }
  attr.phi.assign(m, 0.0);
  for (std::size_t c = 0; c < k; ++c) attr.phi[selected[c]] = beta(static_cast<Eigen::Index>(c));
  attr.base_value = intercept;
  attr.predicted_value = sf.evaluate(instance);

  const Eigen::VectorXd fitted = (x * beta).array() + intercept;
  const double ss_res = (w.array() * (y - fitted).array().square()).sum();
  const double ss_tot = (w.array() * (y.array() - y_mean).square()).sum();
  const double surrogate_at_instance = fitted(0);

  auto& diag = attr.diagnostics;
  diag.perturbations = n;
  diag.surrogate_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  diag.surrogate_prediction = surrogate_at_instance;
  diag.discrepancy = std::abs(surrogate_at_instance - attr.predicted_value);
  diag.selected_features = selected;
  return attr;
}

}  // namespace fraudx
