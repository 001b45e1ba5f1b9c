#include "fraudx/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "text_io.hpp"

namespace fraudx {
namespace {

struct Stats {
  double count = 0.0;
  double w = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;

  void add(const TreeTrainingSet& data, int row) {
    const auto r = static_cast<std::size_t>(row);
    count += data.multiplicity.empty() ? 1.0 : data.multiplicity[r];
    const double wr = data.weight.empty() ? 1.0 : data.weight[r];
    w += wr;
    s1 += wr * data.target[r];
    if (!data.hessian.empty()) s2 += wr * data.hessian[r];
  }
  Stats minus(const Stats& o) const { return {count - o.count, w - o.w, s1 - o.s1, s2 - o.s2}; }
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double cost = 0.0;
};

class Grower {
 public:
  Grower(const TreeTrainingSet& data, const TreeGrowthOptions& options)
      : data_(data), opt_(options), d_(data.x->cols()), rng_(options.seed) {
    const Matrix& x = *data.x;
    std::vector<int> rows;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (data.multiplicity.empty() || data.multiplicity[i] > 0) rows.push_back(static_cast<int>(i));
    }
    order_.assign(d_, rows);
    for (std::size_t f = 0; f < d_; ++f) {
      std::sort(order_[f].begin(), order_[f].end(), [&](int a, int b) {
        const double va = x(static_cast<std::size_t>(a), f);
        const double vb = x(static_cast<std::size_t>(b), f);
        return va < vb || (va == vb && a < b);
      });
    }
    goes_left_.assign(x.rows(), 0);
    buffer_.resize(rows.size());
    features_.resize(d_);
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree grow() {
    if (!order_.empty() && !order_[0].empty()) build(0, order_[0].size(), 0);
    if (nodes_.empty()) nodes_.push_back(TreeNode{});
    return Tree(std::move(nodes_));
  }

 private:
  double cost(const Stats& s) const {
    if (opt_.criterion == SplitCriterion::Gini) {
      return s.w > 0.0 ? 2.0 * s.s1 * (s.w - s.s1) / s.w : 0.0;
    }
    const double h = s.s2 + opt_.l2_leaf;
    return h > 0.0 ? -(s.s1 * s.s1) / h : 0.0;
  }

  double leaf_value(const Stats& s) const {
    if (opt_.criterion == SplitCriterion::Gini) return s.w > 0.0 ? s.s1 / s.w : 0.0;
    const double h = s.s2 + opt_.l2_leaf;
    return h > 0.0 ? -s.s1 / h : 0.0;
  }

  double value(int row, std::size_t f) const { return (*data_.x)(static_cast<std::size_t>(row), f); }

  int build(std::size_t begin, std::size_t end, int depth) {
    Stats total;
    for (std::size_t k = begin; k < end; ++k) total.add(data_, order_[0][k]);

    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(total)});

    const bool depth_capped = opt_.max_depth > 0 && depth >= opt_.max_depth;
    const bool too_small = total.count < opt_.min_samples_split ||
                           total.count < 2.0 * opt_.min_samples_leaf;
    const bool pure = opt_.criterion == SplitCriterion::Gini && (total.s1 <= 0.0 || total.s1 >= total.w);
    if (depth_capped || too_small || pure) return index;

    const Split best = find_split(begin, end, total);
    if (best.feature < 0) return index;

    const auto f = static_cast<std::size_t>(best.feature);
    std::size_t n_left = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const int row = order_[0][k];
      const bool left = value(row, f) <= best.threshold;
      goes_left_[static_cast<std::size_t>(row)] = left;
      n_left += left;
    }
    for (auto& ord : order_) {
      auto out_left = buffer_.begin();
      auto out_right = buffer_.begin() + static_cast<std::ptrdiff_t>(n_left);
      for (std::size_t k = begin; k < end; ++k) {
        const int row = ord[k];
        if (goes_left_[static_cast<std::size_t>(row)]) {
          *out_left++ = row;
        } else {
          *out_right++ = row;
        }
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(end - begin),
                ord.begin() + static_cast<std::ptrdiff_t>(begin));
    }

    const int left = build(begin, begin + n_left, depth + 1);
    const int right = build(begin + n_left, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  Split find_split(std::size_t begin, std::size_t end, const Stats& total) {
    const bool subsample = opt_.max_features > 0 && static_cast<std::size_t>(opt_.max_features) < d_;
    if (subsample) {
      std::iota(features_.begin(), features_.end(), 0);
      std::shuffle(features_.begin(), features_.end(), rng_);
    }
    const double parent_cost = cost(total);
    Split best;
    best.cost = parent_cost;
    bool found = false;
    int examined = 0;
    for (const auto f : features_) {
      if (subsample && found && examined >= opt_.max_features) break;
      const auto& ord = order_[f];
      if (value(ord[begin], f) == value(ord[end - 1], f)) continue;  // constant here
      ++examined;
      Stats left;
      for (std::size_t k = begin; k + 1 < end; ++k) {
        left.add(data_, ord[k]);
        const double a = value(ord[k], f);
        const double b = value(ord[k + 1], f);
        if (!(a < b)) continue;
        if (left.count < opt_.min_samples_leaf) continue;
        const Stats right = total.minus(left);
        if (right.count < opt_.min_samples_leaf) break;
        const double c = cost(left) + cost(right);
        // Gini: any split of an impure node is acceptable (XOR-like layouts
        // need zero-gain first splits). Newton: require a strict gain.
        const bool acceptable =
            opt_.criterion == SplitCriterion::Gini
                ? (!found || c < best.cost)
                : c < best.cost - 1e-12 * (1.0 + std::abs(parent_cost));
        if (acceptable) {
          double t = a + (b - a) * 0.5;
          if (!(t < b)) t = a;
          best = {static_cast<int>(f), t, c};
          found = true;
        }
      }
    }
    if (!found) best.feature = -1;
    return best;
  }

  const TreeTrainingSet& data_;
  const TreeGrowthOptions& opt_;
  std::size_t d_;
  std::mt19937_64 rng_;
  std::vector<std::vector<int>> order_;
  std::vector<char> goes_left_;
  std::vector<int> buffer_;
  std::vector<std::size_t> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

int Tree::depth() const {
  if (nodes_.empty()) return 0;
  int deepest = 0;
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  while (!stack.empty()) {
    const auto [i, dep] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, dep);
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, dep + 1);
      stack.emplace_back(n.right, dep + 1);
    }
  }
  return deepest;
}

std::size_t Tree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.feature < 0; }));
}

void Tree::save(std::ostream& out) const {
  out << "tree " << nodes_.size() << '\n';
  for (const auto& n : nodes_) {
    out << n.feature << ' ';
    text_io::write_double(out, n.threshold);
    out << ' ' << n.left << ' ' << n.right << ' ';
    text_io::write_double(out, n.value);
    out << '\n';
  }
}

Tree Tree::load(std::istream& in) {
  text_io::expect(in, "tree");
  const auto n = text_io::read_integer(in);
  if (n <= 0) throw ModelFormatError("tree with no nodes");
  std::vector<TreeNode> nodes(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    auto& node = nodes[static_cast<std::size_t>(i)];
    node.feature = static_cast<int>(text_io::read_integer(in));
    node.threshold = text_io::read_double(in);
    node.left = static_cast<int>(text_io::read_integer(in));
    node.right = static_cast<int>(text_io::read_integer(in));
    node.value = text_io::read_double(in);
    if (node.feature >= 0 && (node.left <= i || node.right <= i || node.left >= n || node.right >= n)) {
      throw ModelFormatError("tree node with invalid children");
    }
  }
  return Tree(std::move(nodes));
}

Tree grow_tree(const TreeTrainingSet& data, const TreeGrowthOptions& options) {
  if (data.x == nullptr) throw std::invalid_argument("grow_tree: no feature matrix");
  return Grower(data, options).grow();
}

}  // namespace fraudx
