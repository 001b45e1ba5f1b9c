#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "fraudx/explain.hpp"

namespace fraudx {
namespace {

using Mask = std::uint64_t;
constexpr std::size_t kMaxMaskFeatures = 64;

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(out);
}

std::vector<std::string> names_or_default(const std::vector<std::string>& names, std::size_t m) {
  if (names.empty()) {
    std::vector<std::string> out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = "f" + std::to_string(j);
    return out;
  }
  if (names.size() != m) {
    throw ExplainError("expected " + std::to_string(m) + " feature names, got " +
                       std::to_string(names.size()));
  }
  return names;
}

// Masked predictions v(S): mean of the score over hybrid rows that take the
// coalition's features from the instance and the rest from each background row.
class CoalitionValue {
 public:
  CoalitionValue(const ScoreFunction& sf, std::span<const double> instance,
                 const BackgroundSpec& background)
      : sf_(sf), instance_(instance.begin(), instance.end()) {
    if (!background.resolved) throw ExplainError("background has not been resolved");
    background_ = &background.resolved_rows;
    if (background_->empty()) throw ExplainError("background is empty");
    if (instance.size() != sf.n_features()) {
      throw ExplainError("instance has " + std::to_string(instance.size()) +
                         " features, model expects " + std::to_string(sf.n_features()));
    }
    if (background_->cols() != instance.size()) {
      throw ExplainError("background has " + std::to_string(background_->cols()) +
                         " columns, instance has " + std::to_string(instance.size()));
    }
    hybrid_ = *background_;
    scores_.resize(background_->rows());
  }

  std::size_t background_rows() const { return background_->rows(); }

  template <typename InCoalition>
  double operator()(InCoalition&& in_coalition) {
    const std::size_t m = instance_.size();
    for (std::size_t r = 0; r < hybrid_.rows(); ++r) {
      auto dst = hybrid_.row(r);
      const auto src = background_->row(r);
      for (std::size_t j = 0; j < m; ++j) dst[j] = in_coalition(j) ? instance_[j] : src[j];
    }
    sf_.evaluate_batch(hybrid_, scores_);
    // Offsets from the first score, so a coalition whose hybrid rows all
    // score the same returns that score exactly.
    const double first = scores_.front();
    double offset = 0.0;
    for (const double s : scores_) offset += s - first;
    return first + offset / static_cast<double>(scores_.size());
  }

  double of_mask(Mask mask) {
    return (*this)([mask](std::size_t j) { return ((mask >> j) & 1U) != 0; });
  }

 private:
  const ScoreFunction& sf_;
  std::vector<double> instance_;
  const Matrix* background_ = nullptr;
  Matrix hybrid_;
  std::vector<double> scores_;
};

struct CoalitionPlan {
  std::vector<Mask> masks;
  std::vector<double> weights;
  bool full = false;
};

CoalitionPlan enumerate_all(std::size_t m) {
  CoalitionPlan plan;
  plan.full = true;
  const Mask end = (Mask{1} << m) - 1;
  for (Mask mask = 1; mask < end; ++mask) {
    plan.masks.push_back(mask);
    plan.weights.push_back(shapley_kernel_weight(m, static_cast<std::size_t>(std::popcount(mask))));
  }
  return plan;
}

// Calls fn(mask) for every subset of {0..m-1} with `size` members, in
// lexicographic order of member indices.
template <typename Fn>
void for_each_subset(std::size_t m, std::size_t size, Fn&& fn) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    Mask mask = 0;
    for (const auto i : idx) mask |= Mask{1} << i;
    fn(mask);
    std::size_t pos = size;
    while (pos > 0 && idx[pos - 1] == m - size + pos - 1) --pos;
    if (pos == 0) return;
    ++idx[pos - 1];
    for (std::size_t k = pos; k < size; ++k) idx[k] = idx[k - 1] + 1;
  }
}

// Budgeted plan: coalition sizes are enumerated completely, smallest and
// largest first, while the budget covers their share of the kernel mass; the
// remaining budget is sampled from the leftover sizes (with complements).
CoalitionPlan sample_plan(std::size_t m, std::size_t budget, std::uint64_t seed) {
  CoalitionPlan plan;
  const std::size_t n_sizes = m / 2;  // ceil((m - 1) / 2)
  const std::size_t n_paired = (m - 1) / 2;
  const Mask all = (m == kMaxMaskFeatures) ? ~Mask{0} : (Mask{1} << m) - 1;

  std::vector<double> size_weight(n_sizes);
  for (std::size_t i = 0; i < n_sizes; ++i) {
    const auto s = static_cast<double>(i + 1);
    size_weight[i] = static_cast<double>(m - 1) / (s * (static_cast<double>(m) - s));
    if (i < n_paired) size_weight[i] *= 2.0;
  }
  const double total = std::accumulate(size_weight.begin(), size_weight.end(), 0.0);
  for (auto& w : size_weight) w /= total;

  std::vector<double> remaining_weight = size_weight;
  double remaining = static_cast<double>(budget);
  std::size_t n_full_sizes = 0;
  for (std::size_t i = 0; i < n_sizes; ++i) {
    const std::size_t size = i + 1;
    const bool paired = i < n_paired;
    const double n_subsets = binomial(m, size) * (paired ? 2.0 : 1.0);
    if (remaining_weight[i] * remaining / n_subsets < 1.0 - 1e-8) break;
    ++n_full_sizes;
    remaining -= n_subsets;
    if (remaining_weight[i] < 1.0) {
      const double scale = 1.0 - remaining_weight[i];
      for (std::size_t k = i + 1; k < n_sizes; ++k) remaining_weight[k] /= scale;
    }
    double w = size_weight[i] / binomial(m, size);
    if (paired) w /= 2.0;
    for_each_subset(m, size, [&](Mask mask) {
      plan.masks.push_back(mask);
      plan.weights.push_back(w);
      if (paired) {
        plan.masks.push_back(all & ~mask);
        plan.weights.push_back(w);
      }
    });
  }
  if (n_full_sizes == n_sizes) return plan;

  const std::size_t n_fixed = plan.masks.size();
  const double weight_left =
      std::accumulate(size_weight.begin() + static_cast<std::ptrdiff_t>(n_full_sizes),
                      size_weight.end(), 0.0);
  std::discrete_distribution<std::size_t> pick_size(
      remaining_weight.begin() + static_cast<std::ptrdiff_t>(n_full_sizes), remaining_weight.end());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(m);
  std::unordered_map<Mask, std::size_t> seen;
  auto samples_left = static_cast<std::size_t>(std::max(0.0, std::round(remaining)));
  const std::size_t max_draws = 4 * budget + 1000;
  auto add = [&](Mask mask) {
    const auto [it, inserted] = seen.emplace(mask, plan.masks.size());
    if (inserted) {
      plan.masks.push_back(mask);
      plan.weights.push_back(1.0);
      --samples_left;
    } else {
      plan.weights[it->second] += 1.0;
    }
  };
  for (std::size_t draw = 0; draw < max_draws && samples_left > 0; ++draw) {
    const std::size_t i = n_full_sizes + pick_size(rng);
    const std::size_t size = i + 1;
    std::iota(perm.begin(), perm.end(), 0);
    Mask mask = 0;
    for (std::size_t k = 0; k < size; ++k) {
      std::uniform_int_distribution<std::size_t> pos(k, m - 1);
      std::swap(perm[k], perm[pos(rng)]);
      mask |= Mask{1} << perm[k];
    }
    add(mask);
    if (i < n_paired && samples_left > 0) add(all & ~mask);
  }

  double sampled_total = 0.0;
  for (std::size_t c = n_fixed; c < plan.weights.size(); ++c) sampled_total += plan.weights[c];
  for (std::size_t c = n_fixed; c < plan.weights.size() && sampled_total > 0.0; ++c) {
    plan.weights[c] *= weight_left / sampled_total;
  }
  return plan;
}

}  // namespace

double shapley_kernel_weight(std::size_t m, std::size_t size) {
  if (size == 0 || size >= m) return std::numeric_limits<double>::infinity();
  const auto s = static_cast<double>(size);
  return static_cast<double>(m - 1) / (binomial(m, size) * s * (static_cast<double>(m) - s));
}

Attribution kernel_shap(const ScoreFunction& sf, std::span<const double> instance,
                        const BackgroundSpec& background, const KernelShapOptions& options) {
  const std::size_t m = instance.size();
  CoalitionValue value(sf, instance, background);

  Attribution attr;
  attr.method = ExplainMethod::KernelShap;
  attr.feature_names = names_or_default(options.feature_names, m);
  attr.predicted_value = sf.evaluate(instance);
  attr.base_value = value.of_mask(0);
  attr.phi.assign(m, 0.0);
  attr.diagnostics.background_rows = value.background_rows();

  const CoalitionBudget budget = options.budget.value_or(CoalitionBudget::default_for(m));
  if (budget.full && m > kMaxFullEnumerationFeatures) {
    throw ExplainError("full coalition enumeration supports at most " +
                       std::to_string(kMaxFullEnumerationFeatures) + " features, got " +
                       std::to_string(m));
  }
  if (!budget.full && budget.count < m + 2) {
    throw ExplainError("n_coalitions = " + std::to_string(budget.count) + " is below M + 2 = " +
                       std::to_string(m + 2) + "; the regression is underdetermined");
  }

  const double delta = attr.predicted_value - attr.base_value;
  if (m <= 1) {
    if (m == 1) attr.phi[0] = delta;
    attr.diagnostics.full_enumeration = true;
    attr.diagnostics.regression_residual = 0.0;
    attr.diagnostics.local_accuracy_residual = std::abs(attr.base_value + delta - attr.predicted_value);
    return attr;
  }

  const bool enumerate =
      budget.full || (m < kMaxMaskFeatures && static_cast<double>(budget.count) >=
                                                  std::ldexp(1.0, static_cast<int>(m)) - 2.0);
  if (!enumerate && m > kMaxMaskFeatures) {
    throw ExplainError("sampled KernelSHAP supports at most 64 features");
  }
  const CoalitionPlan plan = enumerate ? enumerate_all(m) : sample_plan(m, budget.count, options.seed);

  // The last feature is eliminated through sum(phi) = delta, which turns the
  // two infinite-weight constraints into an ordinary weighted least squares.
  const std::size_t n = plan.masks.size();
  const std::size_t last = m - 1;
  Eigen::MatrixXd design(n, last);
  Eigen::VectorXd target(n);
  for (std::size_t c = 0; c < n; ++c) {
    const Mask mask = plan.masks[c];
    const double z_last = static_cast<double>((mask >> last) & 1U);
    const double sw = std::sqrt(plan.weights[c]);
    for (std::size_t j = 0; j < last; ++j) {
      design(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
          sw * (static_cast<double>((mask >> j) & 1U) - z_last);
    }
    target(static_cast<Eigen::Index>(c)) =
        sw * (value.of_mask(mask) - attr.base_value - z_last * delta);
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);

  double phi_sum = 0.0;
  for (std::size_t j = 0; j < last; ++j) {
    attr.phi[j] = beta(static_cast<Eigen::Index>(j));
    phi_sum += attr.phi[j];
  }
  attr.phi[last] = delta - phi_sum;

  const Eigen::VectorXd fit_residual = design * beta - target;
  const double weight_total = std::accumulate(plan.weights.begin(), plan.weights.end(), 0.0);
  attr.diagnostics.regression_residual = std::sqrt(fit_residual.squaredNorm() / weight_total);
  attr.diagnostics.coalitions = n;
  attr.diagnostics.full_enumeration = plan.full;
  const double total = std::accumulate(attr.phi.begin(), attr.phi.end(), attr.base_value);
  attr.diagnostics.local_accuracy_residual = std::abs(total - attr.predicted_value);
  return attr;
}

Attribution exact_shapley(const ScoreFunction& sf, std::span<const double> instance,
                          const BackgroundSpec& background,
                          const std::vector<std::string>& feature_names) {
  const std::size_t m = instance.size();
  if (m > kMaxExactShapleyFeatures) {
    throw ExplainError("exact Shapley supports at most " +
                       std::to_string(kMaxExactShapleyFeatures) + " features, got " +
                       std::to_string(m));
  }
  CoalitionValue value(sf, instance, background);

  Attribution attr;
  attr.method = ExplainMethod::ExactShapley;
  attr.feature_names = names_or_default(feature_names, m);
  attr.predicted_value = sf.evaluate(instance);

  const Mask n_masks = Mask{1} << m;
  std::vector<double> v(n_masks);
  for (Mask mask = 0; mask < n_masks; ++mask) v[mask] = value.of_mask(mask);
  attr.base_value = v[0];

  // |S|! (M - |S| - 1)! / M!, exact in doubles for M <= 12.
  std::vector<double> factorial(m + 1, 1.0);
  for (std::size_t k = 1; k <= m; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);
  std::vector<double> weight(m, 0.0);
  for (std::size_t s = 0; s < m; ++s) weight[s] = factorial[s] * factorial[m - s - 1] / factorial[m];

  attr.phi.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const Mask bit = Mask{1} << i;
    double phi = 0.0;
    for (Mask mask = 0; mask < n_masks; ++mask) {
      if ((mask & bit) != 0) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (v[mask | bit] - v[mask]);
    }
    attr.phi[i] = phi;
  }

  attr.diagnostics.coalitions = static_cast<std::size_t>(n_masks);
  attr.diagnostics.full_enumeration = true;
  attr.diagnostics.background_rows = value.background_rows();
  const double total = std::accumulate(attr.phi.begin(), attr.phi.end(), attr.base_value);
  attr.diagnostics.local_accuracy_residual = std::abs(total - attr.predicted_value);
  return attr;
}

}  // namespace fraudx
