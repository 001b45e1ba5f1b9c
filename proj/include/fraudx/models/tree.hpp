#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fraudx/matrix.hpp"

namespace fraudx {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

// Binary tree over numeric features; x[feature] <= threshold goes left.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;
  std::size_t n_leaves() const;

  void save(std::ostream& out) const;
  static Tree load(std::istream& in);

 private:
  std::vector<TreeNode> nodes_;
};

enum class SplitCriterion {
  Gini,    // targets are 0/1 labels; leaf value = weighted positive fraction
  Newton,  // targets are gradients, hessians given; leaf value = -G / (H + l2)
};

struct TreeGrowthOptions {
  SplitCriterion criterion = SplitCriterion::Gini;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 = all features
  double l2_leaf = 0.0;
  std::uint64_t seed = 0;  // feature subsampling only
};

// Per-row training data. `multiplicity` counts bootstrap copies (rows with 0
// are excluded); `weight` already includes the multiplicity.
struct TreeTrainingSet {
  const Matrix* x = nullptr;
  std::span<const double> target;   // label (Gini) or gradient (Newton)
  std::span<const double> hessian;  // Newton only
  std::span<const double> weight;
  std::span<const int> multiplicity;
};

// CART growth with presorted feature orders: each node keeps, per feature, the
// slice of its rows sorted by that feature, partitioned stably on every split.
Tree grow_tree(const TreeTrainingSet& data, const TreeGrowthOptions& options);

}  // namespace fraudx
