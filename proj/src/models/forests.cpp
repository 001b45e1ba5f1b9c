#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fraudx/models/classifiers.hpp"
#include "text_io.hpp"

namespace fraudx {
namespace {

std::vector<double> as_targets(const std::vector<int>& labels) {
  return {labels.begin(), labels.end()};
}

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

void save_trees(std::ostream& out, const std::vector<Tree>& trees) {
  out << "trees " << trees.size() << '\n';
  for (const auto& t : trees) t.save(out);
}

std::vector<Tree> load_trees(std::istream& in, std::size_t n_features) {
  text_io::expect(in, "trees");
  const auto n = text_io::read_integer(in);
  if (n < 0) throw ModelFormatError("negative tree count");
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(n));
  for (long long t = 0; t < n; ++t) {
    trees.push_back(Tree::load(in));
    for (const auto& node : trees.back().nodes()) {
      if (node.feature >= static_cast<int>(n_features)) {
        throw ModelFormatError("tree splits on a feature out of range");
      }
    }
  }
  return trees;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decision tree

std::shared_ptr<DecisionTreeModel> DecisionTreeModel::fit(const DecisionTreeParams& params,
                                                          const Dataset& data,
                                                          bool class_weighting) {
  const auto targets = as_targets(*data.labels);
  const auto weights = training_weights(*data.labels, class_weighting);
  TreeTrainingSet set;
  set.x = &data.matrix;
  set.target = targets;
  set.weight = weights;
  TreeGrowthOptions options;
  options.criterion = SplitCriterion::Gini;
  options.max_depth = params.max_depth;
  options.min_samples_split = params.min_samples_split;
  options.min_samples_leaf = params.min_samples_leaf;
  return std::make_shared<DecisionTreeModel>(grow_tree(set, options), data.n_features());
}

void DecisionTreeModel::save_body(std::ostream& out) const { save_trees(out, {tree_}); }

std::shared_ptr<DecisionTreeModel> DecisionTreeModel::load_body(std::istream& in,
                                                                std::size_t n_features) {
  auto trees = load_trees(in, n_features);
  if (trees.size() != 1) throw ModelFormatError("decision tree: expected one tree");
  return std::make_shared<DecisionTreeModel>(std::move(trees.front()), n_features);
}

// ---------------------------------------------------------------------------
// Random forest

std::shared_ptr<RandomForestModel> RandomForestModel::fit(const RandomForestParams& params,
                                                          const Dataset& data, std::uint64_t seed,
                                                          bool class_weighting) {
  const std::size_t n = data.n_rows();
  const std::size_t d = data.n_features();
  const auto targets = as_targets(*data.labels);
  const auto class_w = training_weights(*data.labels, class_weighting);
  const int max_features =
      params.max_features > 0 ? params.max_features
                              : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_estimators));
  std::vector<int> multiplicity(n);
  std::vector<double> weights(n);
  for (int t = 0; t < params.n_estimators; ++t) {
    const auto tree_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(tree_seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::fill(multiplicity.begin(), multiplicity.end(), 0);
    for (std::size_t k = 0; k < n; ++k) ++multiplicity[pick(rng)];
    for (std::size_t i = 0; i < n; ++i) weights[i] = multiplicity[i] * class_w[i];

    TreeTrainingSet set;
    set.x = &data.matrix;
    set.target = targets;
    set.weight = weights;
    set.multiplicity = multiplicity;
    TreeGrowthOptions options;
    options.criterion = SplitCriterion::Gini;
    options.max_depth = params.max_depth;
    options.min_samples_split = params.min_samples_split;
    options.min_samples_leaf = params.min_samples_leaf;
    options.max_features = max_features;
    options.seed = derive_seed(tree_seed, 1);
    trees.push_back(grow_tree(set, options));
  }
  return std::make_shared<RandomForestModel>(std::move(trees), d);
}

double RandomForestModel::score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return trees_.empty() ? 0.0 : sum / static_cast<double>(trees_.size());
}

void RandomForestModel::save_body(std::ostream& out) const { save_trees(out, trees_); }

std::shared_ptr<RandomForestModel> RandomForestModel::load_body(std::istream& in,
                                                                std::size_t n_features) {
  return std::make_shared<RandomForestModel>(load_trees(in, n_features), n_features);
}

// ---------------------------------------------------------------------------
// Gradient boosting

std::shared_ptr<GradientBoostingModel> GradientBoostingModel::fit(
    const GradientBoostingParams& params, const Dataset& data, bool class_weighting) {
  const std::size_t n = data.n_rows();
  const auto& labels = *data.labels;
  const auto weights = training_weights(labels, class_weighting);

  double pos = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pos += weights[i] * labels[i];
    total += weights[i];
  }
  const double p0 = std::clamp(pos / total, 1e-6, 1.0 - 1e-6);
  const double base_margin = std::log(p0 / (1.0 - p0));

  std::vector<double> margin(n, base_margin), grad(n), hess(n);
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_estimators));
  for (int t = 0; t < params.n_estimators; ++t) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - labels[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
      const double m = margin[i];
      loss += weights[i] * ((m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m))) -
                            labels[i] * m);
    }
    if (!std::isfinite(loss)) {
      throw TrainingError("gradient boosting: non-finite loss at iteration " + std::to_string(t));
    }
    TreeTrainingSet set;
    set.x = &data.matrix;
    set.target = grad;
    set.hessian = hess;
    set.weight = weights;
    TreeGrowthOptions options;
    options.criterion = SplitCriterion::Newton;
    options.max_depth = params.max_depth;
    options.min_samples_leaf = params.min_samples_leaf;
    options.min_samples_split = 2 * params.min_samples_leaf;
    options.l2_leaf = params.l2_leaf;
    trees.push_back(grow_tree(set, options));
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += params.learning_rate * trees.back().predict(data.matrix.row(i));
    }
  }
  return std::make_shared<GradientBoostingModel>(base_margin, params.learning_rate,
                                                 std::move(trees), data.n_features());
}

double GradientBoostingModel::margin(std::span<const double> x) const {
  double m = base_margin_;
  for (const auto& t : trees_) m += learning_rate_ * t.predict(x);
  return m;
}

double GradientBoostingModel::score(std::span<const double> x) const { return sigmoid(margin(x)); }

void GradientBoostingModel::save_body(std::ostream& out) const {
  out << "base_margin ";
  text_io::write_double(out, base_margin_);
  out << "\nlearning_rate ";
  text_io::write_double(out, learning_rate_);
  out << '\n';
  save_trees(out, trees_);
}

std::shared_ptr<GradientBoostingModel> GradientBoostingModel::load_body(std::istream& in,
                                                                        std::size_t n_features) {
  text_io::expect(in, "base_margin");
  const double base = text_io::read_double(in);
  text_io::expect(in, "learning_rate");
  const double lr = text_io::read_double(in);
  return std::make_shared<GradientBoostingModel>(base, lr, load_trees(in, n_features), n_features);
}

// ---------------------------------------------------------------------------
// Isolation forest

double average_path_length(double n) {
  if (n <= 1.0) return 0.0;
  if (n <= 2.0) return 1.0;
  constexpr double kEulerGamma = 0.5772156649015329;
  const double harmonic = std::log(n - 1.0) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * (n - 1.0) / n;
}

namespace {

class IsolationTreeBuilder {
 public:
  using Node = IsolationForestModel::Node;

  IsolationTreeBuilder(const Matrix& x, std::mt19937_64& rng, int height_limit)
      : x_(x), rng_(rng), height_limit_(height_limit) {}

  std::vector<Node> build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{-1, 0.0, -1, -1, static_cast<int>(rows.size())});
    if (depth >= height_limit_ || rows.size() <= 1) return index;

    std::vector<std::size_t> candidates;
    std::vector<double> lo, hi;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      double mn = x_(rows[0], f), mx = mn;
      for (const auto r : rows) {
        mn = std::min(mn, x_(r, f));
        mx = std::max(mx, x_(r, f));
      }
      if (mx > mn) {
        candidates.push_back(f);
        lo.push_back(mn);
        hi.push_back(mx);
      }
    }
    if (candidates.empty()) return index;

    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t c = pick(rng_);
    const std::size_t f = candidates[c];
    std::uniform_real_distribution<double> cut(lo[c], hi[c]);
    double threshold = cut(rng_);
    if (!(threshold < hi[c])) threshold = lo[c];

    std::vector<std::size_t> left, right;
    for (const auto r : rows) (x_(r, f) <= threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int rr = grow(right, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(f);
    node.threshold = threshold;
    node.left = l;
    node.right = rr;
    return index;
  }

  const Matrix& x_;
  std::mt19937_64& rng_;
  int height_limit_;
  std::vector<Node> nodes_;
};

}  // namespace

std::shared_ptr<IsolationForestModel> IsolationForestModel::fit(
    const IsolationForestParams& params, const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.n_rows();
  if (n == 0) throw TrainingError("isolation forest: no training rows");
  auto model = std::make_shared<IsolationForestModel>();
  model->n_features_ = data.n_features();
  model->subsample_size_ = std::min<std::size_t>(static_cast<std::size_t>(params.max_samples), n);
  const int height_limit = static_cast<int>(
      std::ceil(std::log2(std::max<double>(2.0, static_cast<double>(model->subsample_size_)))));

  std::vector<std::size_t> all(n);
  for (int t = 0; t < params.n_estimators; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t k = 0; k < model->subsample_size_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(all[k], all[pick(rng)]);
    }
    std::vector<std::size_t> rows(all.begin(),
                                  all.begin() + static_cast<std::ptrdiff_t>(model->subsample_size_));
    IsolationTreeBuilder builder(data.matrix, rng, height_limit);
    model->trees_.push_back(builder.build(std::move(rows)));
  }
  return model;
}

double IsolationForestModel::mean_path_length(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& tree : trees_) {
    int i = 0;
    int depth = 0;
    while (tree[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& node = tree[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
      ++depth;
    }
    total += depth + average_path_length(tree[static_cast<std::size_t>(i)].size);
  }
  return trees_.empty() ? 0.0 : total / static_cast<double>(trees_.size());
}

double IsolationForestModel::score(std::span<const double> x) const {
  const double c = average_path_length(static_cast<double>(subsample_size_));
  if (c <= 0.0) return 0.5;
  return std::exp2(-mean_path_length(x) / c);
}

void IsolationForestModel::save_body(std::ostream& out) const {
  out << "subsample " << subsample_size_ << "\ntrees " << trees_.size() << '\n';
  for (const auto& tree : trees_) {
    out << "itree " << tree.size() << '\n';
    for (const auto& node : tree) {
      out << node.feature << ' ';
      text_io::write_double(out, node.threshold);
      out << ' ' << node.left << ' ' << node.right << ' ' << node.size << '\n';
    }
  }
}

std::shared_ptr<IsolationForestModel> IsolationForestModel::load_body(std::istream& in,
                                                                      std::size_t n_features) {
  auto model = std::make_shared<IsolationForestModel>();
  model->n_features_ = n_features;
  text_io::expect(in, "subsample");
  model->subsample_size_ = static_cast<std::size_t>(text_io::read_integer(in));
  text_io::expect(in, "trees");
  const auto n_trees = text_io::read_integer(in);
  for (long long t = 0; t < n_trees; ++t) {
    text_io::expect(in, "itree");
    const auto n_nodes = text_io::read_integer(in);
    if (n_nodes <= 0) throw ModelFormatError("isolation tree with no nodes");
    std::vector<Node> tree(static_cast<std::size_t>(n_nodes));
    for (long long i = 0; i < n_nodes; ++i) {
      auto& node = tree[static_cast<std::size_t>(i)];
      node.feature = static_cast<int>(text_io::read_integer(in));
      node.threshold = text_io::read_double(in);
      node.left = static_cast<int>(text_io::read_integer(in));
      node.right = static_cast<int>(text_io::read_integer(in));
      node.size = static_cast<int>(text_io::read_integer(in));
      if (node.feature >= static_cast<int>(n_features) ||
          (node.feature >= 0 && (node.left <= i || node.right <= i || node.left >= n_nodes ||
                                 node.right >= n_nodes))) {
        throw ModelFormatError("isolation tree node is malformed");
      }
    }
    model->trees_.push_back(std::move(tree));
  }
  return model;
}

}  // namespace fraudx
