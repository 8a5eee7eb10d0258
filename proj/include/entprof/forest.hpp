#pragma once

// Random forest of Gini CART trees with bootstrap resampling.
//
// Each node draws its candidate features from an RNG seeded by the node's
// position in the tree, so a node's split depends only on the rows that
// reach it. Consequently a tree grown with a smaller max_depth or larger
// min_samples_split is exactly the corresponding truncation of a deeper
// tree; grid search exploits this to grow each fold's forest once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "entprof/error.hpp"
#include "entprof/logreg.hpp"
#include "entprof/matrix.hpp"
#include "entprof/rng.hpp"

namespace entprof {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // weighted fraction of class 1 at this node
  int left = -1;
  int right = -1;
  int depth = 0;
  std::uint32_t n_samples = 0;  // distinct training rows reaching the node

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at 0

  /// Leaf value reached by x when growth is limited to the given depth and
  /// minimum split size.
  double predict(std::span<const double> x, int max_depth, int min_samples_split) const {
    std::size_t i = 0;
    for (;;) {
      const TreeNode& n = nodes[i];
      if (n.feature < 0 || n.depth >= max_depth || n.n_samples < static_cast<std::uint32_t>(min_samples_split)) {
        return n.value;
      }
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
  }

  bool operator==(const Tree&) const = default;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 10;
  int min_samples_split = 2;
  bool balance = false;  // per-bootstrap balanced class weights
};

struct ForestModel {
  std::vector<Tree> trees;
  int max_depth = 10;
  int min_samples_split = 2;

  double predict(std::span<const double> x) const { return predict_limited(x, max_depth, min_samples_split); }

  /// Prediction of the forest truncated to the given limits.
  double predict_limited(std::span<const double> x, int depth, int min_split) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x, depth, min_split);
    return trees.empty() ? 0.5 : s / static_cast<double>(trees.size());
  }

  /// Same forest with growth limits tightened; nodes below the new limits
  /// are dropped.
  ForestModel truncated(int depth, int min_split) const;

  bool operator==(const ForestModel&) const = default;
};

namespace detail {

inline void copy_pruned(const Tree& src, std::size_t i, int depth, int min_split, Tree& dst) {
  const TreeNode& n = src.nodes[i];
  std::size_t out = dst.nodes.size();
  dst.nodes.push_back(n);
  bool leaf = n.feature < 0 || n.depth >= depth || n.n_samples < static_cast<std::uint32_t>(min_split);
  if (leaf) {
    dst.nodes[out].feature = -1;
    dst.nodes[out].threshold = 0.0;
    dst.nodes[out].left = dst.nodes[out].right = -1;
    return;
  }
  dst.nodes[out].left = static_cast<int>(dst.nodes.size());
  copy_pruned(src, static_cast<std::size_t>(n.left), depth, min_split, dst);
  dst.nodes[out].right = static_cast<int>(dst.nodes.size());
  copy_pruned(src, static_cast<std::size_t>(n.right), depth, min_split, dst);
}

/// Row orderings of a dataset by each feature, shared by all trees grown
/// on it.
struct PresortedColumns {
  std::vector<std::vector<std::uint32_t>> order;  // order[f] = rows sorted by x[:, f]

  explicit PresortedColumns(const Matrix& x) : order(x.cols()) {
    for (std::size_t f = 0; f < x.cols(); ++f) {
      auto& o = order[f];
      o.resize(x.rows());
      std::iota(o.begin(), o.end(), 0u);
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    }
  }
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const int> y, const PresortedColumns& presorted, int max_depth,
             int min_samples_split)
      : x_(x),
        y_(y),
        presorted_(presorted),
        max_depth_(max_depth),
        min_samples_split_(min_samples_split),
        max_features_(std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(
                                                   static_cast<double>(x.cols())))))),
        weight_(x.rows(), 0.0),
        goes_left_(x.rows(), 0) {}

  Tree grow(std::uint64_t tree_seed, bool balance) {
    const std::size_t n = x_.rows();
    const std::size_t d = x_.cols();
    Rng rng(tree_seed);

    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[uniform_index(rng, n)];

    double cw[2] = {1.0, 1.0};
    if (balance) {
      double c1 = 0.0, c0 = 0.0;
      for (std::size_t i = 0; i < n; ++i) (y_[i] ? c1 : c0) += counts[i];
      if (c0 > 0 && c1 > 0) {
        cw[0] = static_cast<double>(n) / (2.0 * c0);
        cw[1] = static_cast<double>(n) / (2.0 * c1);
      }
    }
    for (std::size_t i = 0; i < n; ++i) weight_[i] = counts[i] * cw[y_[i] ? 1 : 0];

    sorted_.assign(d, {});
    for (std::size_t f = 0; f < d; ++f) {
      auto& s = sorted_[f];
      s.reserve(n);
      for (auto r : presorted_.order[f]) {
        if (counts[r] > 0) s.push_back(r);
      }
    }
    buffer_.resize(sorted_.empty() ? 0 : sorted_[0].size());

    tree_seed_ = tree_seed;
    Tree tree;
    tree.nodes.reserve(64);
    build(tree, 0, sorted_.empty() ? 0 : sorted_[0].size(), 0, 1);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double proxy = -1.0;  // sum over children of sum_c w_c^2 / W
    std::size_t left_count = 0;
  };

  int build(Tree& tree, std::size_t begin, std::size_t end, int depth, std::uint64_t path) {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double w1 = 0.0, w = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      auto r = sorted_[0][k];
      w += weight_[r];
      if (y_[r]) w1 += weight_[r];
    }
    {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      node.depth = depth;
      node.n_samples = static_cast<std::uint32_t>(end - begin);
      node.value = w > 0.0 ? w1 / w : 0.5;
    }
    bool pure = w1 <= 0.0 || w1 >= w;
    if (pure || depth >= max_depth_ || end - begin < static_cast<std::size_t>(min_samples_split_) ||
        end - begin < 2) {
      return id;
    }

    Split best = find_split(begin, end, w, w1, path);
    if (best.feature < 0) return id;

    partition(begin, end, best);
    std::size_t mid = begin + best.left_count;
    int left = build(tree, begin, mid, depth + 1, 2 * path);
    int right = build(tree, mid, end, depth + 1, 2 * path + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split find_split(std::size_t begin, std::size_t end, double w, double w1, std::uint64_t path) {
    const std::size_t d = x_.cols();
    Rng rng(derive_seed(tree_seed_, path));
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    shuffle(features.begin(), features.end(), rng);

    // Visit features in draw order until max_features non-constant ones
    // have been found; constant features do not count toward the budget.
    std::vector<std::size_t> candidates;
    for (std::size_t f : features) {
      if (candidates.size() >= max_features_) break;
      const auto& s = sorted_[f];
      if (x_(s[begin], f) < x_(s[end - 1], f)) candidates.push_back(f);
    }
    std::sort(candidates.begin(), candidates.end());

    Split best;
    for (std::size_t f : candidates) {
      const auto& s = sorted_[f];
      double lw = 0.0, lw1 = 0.0;
      for (std::size_t k = begin; k + 1 < end; ++k) {
        auto r = s[k];
        lw += weight_[r];
        if (y_[r]) lw1 += weight_[r];
        double v = x_(r, f);
        double next = x_(s[k + 1], f);
        if (!(v < next)) continue;
        double rw = w - lw, rw1 = w1 - lw1;
        if (lw <= 0.0 || rw <= 0.0) continue;
        double lw0 = lw - lw1, rw0 = rw - rw1;
        double proxy = (lw1 * lw1 + lw0 * lw0) / lw + (rw1 * rw1 + rw0 * rw0) / rw;
        if (proxy > best.proxy) {
          best.feature = static_cast<int>(f);
          best.threshold = v + 0.5 * (next - v);
          // Midpoint can round up to next for adjacent doubles.
          if (!(best.threshold < next)) best.threshold = v;
          best.proxy = proxy;
          best.left_count = k + 1 - begin;
        }
      }
    }
    return best;
  }

  void partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto f = static_cast<std::size_t>(split.feature);
    for (std::size_t k = begin; k < end; ++k) {
      auto r = sorted_[f][k];
      goes_left_[r] = x_(r, f) <= split.threshold;
    }
    for (auto& s : sorted_) {
      std::size_t l = begin, b = 0;
      for (std::size_t k = begin; k < end; ++k) {
        auto r = s[k];
        if (goes_left_[r]) {
          s[l++] = r;
        } else {
          buffer_[b++] = r;
        }
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(b), s.begin() + static_cast<std::ptrdiff_t>(l));
    }
  }

  const Matrix& x_;
  std::span<const int> y_;
  const PresortedColumns& presorted_;
  int max_depth_;
  int min_samples_split_;
  std::size_t max_features_;
  std::vector<double> weight_;
  std::vector<char> goes_left_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<std::uint32_t> buffer_;
  std::uint64_t tree_seed_ = 0;
};

}  // namespace detail

inline ForestModel ForestModel::truncated(int depth, int min_split) const {
  ForestModel out;
  out.max_depth = std::min(depth, max_depth);
  out.min_samples_split = std::max(min_split, min_samples_split);
  out.trees.reserve(trees.size());
  for (const auto& t : trees) {
    Tree pruned;
    detail::copy_pruned(t, 0, out.max_depth, out.min_samples_split, pruned);
    out.trees.push_back(std::move(pruned));
  }
  return out;
}

inline ForestModel train_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params,
                                       std::uint64_t seed) {
  if (x.rows() != y.size()) fail(ErrorCode::kDimensionMismatch, "X and y differ in length");
  if (params.n_trees < 1 || params.max_depth < 1 || params.min_samples_split < 2) {
    fail(ErrorCode::kInvalidConfig, "invalid forest parameters");
  }
  require_both_classes(y);
  detail::PresortedColumns presorted(x);
  detail::TreeGrower grower(x, y, presorted, params.max_depth, params.min_samples_split);
  ForestModel model;
  model.max_depth = params.max_depth;
  model.min_samples_split = params.min_samples_split;
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    model.trees.push_back(grower.grow(derive_seed(seed, static_cast<std::uint64_t>(t)), params.balance));
  }
  return model;
}

}  // namespace entprof
