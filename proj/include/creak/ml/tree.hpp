#pragma once

// CART classification tree with Gini impurity.
//
// Split search is exhaustive over midpoints between sorted distinct values.
// Candidates are compared exactly (integer arithmetic on class counts); ties
// go to the lowest feature index, then the lowest threshold.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "creak/ml/dataset.hpp"
#include "creak/rng.hpp"

namespace creak::ml {

struct TreeParams {
  std::size_t max_depth = 5;     // 0 = unbounded
  std::size_t max_features = 0;  // features examined per split; 0 = all

  bool operator==(const TreeParams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  CreakLabel label = CreakLabel::Low;
  std::uint32_t n_low = 0;
  std::uint32_t n_high = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

inline CreakLabel majority_label(std::size_t n_low, std::size_t n_high) {
  return n_high > n_low ? CreakLabel::High : CreakLabel::Low;
}

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
      : nodes_(std::move(nodes)), n_features_(n_features) {}

  // Training rows are given by index so bootstrap samples can repeat rows.
  // `rng` is only consulted when params.max_features limits the candidates.
  static DecisionTree fit(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params,
                          Rng* rng = nullptr) {
    DecisionTree tree;
    tree.n_features_ = data.dim();
    Builder b{data, params, rng, tree.nodes_, {}, {}};
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    b.build(idx, 0);
    return tree;
  }

  static DecisionTree fit(const Dataset& data, const TreeParams& params) {
    validate_training(data);
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return fit(data, rows, params);
  }

  CreakLabel predict(std::span<const double> x) const {
    check_dim(x, n_features_);
    std::size_t i = 0;
    while (!nodes_[i].is_leaf())
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold
                                       ? nodes_[i].left
                                       : nodes_[i].right);
    return nodes_[i].label;
  }

  // Number of splits on the longest root-to-leaf path.
  std::size_t depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }

 private:
  std::size_t depth_from(std::size_t i) const {
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    // Children purity sum(c^2)/n over both sides, as the fraction num/den.
    // Larger is better (lower weighted Gini).
    unsigned __int128 num = 0;
    unsigned __int128 den = 1;
  };

  struct Builder {
    const Dataset& data;
    const TreeParams& params;
    Rng* rng;
    std::vector<TreeNode>& nodes;
    std::vector<std::pair<double, std::uint8_t>> buf;
    std::vector<std::size_t> order;

    static bool better(const Split& a, const Split& b) {
      if (!b.found) return true;
      const unsigned __int128 lhs = a.num * b.den, rhs = b.num * a.den;
      if (lhs != rhs) return lhs > rhs;
      if (a.feature != b.feature) return a.feature < b.feature;
      return a.threshold < b.threshold;
    }

    // Best threshold on one feature; returns false if the feature is constant.
    bool scan_feature(const std::vector<std::size_t>& idx, std::size_t f, std::size_t total_high, Split& best) {
      buf.clear();
      for (std::size_t r : idx) buf.emplace_back(data.x(r, f), data.y[r] == CreakLabel::High ? 1 : 0);
      std::sort(buf.begin(), buf.end());
      if (buf.front().first == buf.back().first) return false;
      const std::uint64_t n = buf.size();
      std::uint64_t left_n = 0, left_high = 0;
      for (std::size_t i = 0; i + 1 < buf.size(); ++i) {
        ++left_n;
        left_high += buf[i].second;
        if (buf[i].first == buf[i + 1].first) continue;
        const std::uint64_t left_low = left_n - left_high;
        const std::uint64_t right_n = n - left_n;
        const std::uint64_t right_high = total_high - left_high;
        const std::uint64_t right_low = right_n - right_high;
        Split s;
        s.found = true;
        s.feature = f;
        double thr = 0.5 * (buf[i].first + buf[i + 1].first);
        if (thr >= buf[i + 1].first) thr = buf[i].first;
        s.threshold = thr;
        using U = unsigned __int128;
        s.num = (U(left_low) * left_low + U(left_high) * left_high) * right_n +
                (U(right_low) * right_low + U(right_high) * right_high) * left_n;
        s.den = U(left_n) * right_n;
        if (better(s, best)) best = s;
      }
      return true;
    }

    int build(std::vector<std::size_t>& idx, std::size_t depth) {
      std::size_t n_high = 0;
      for (std::size_t r : idx) n_high += data.y[r] == CreakLabel::High;
      const std::size_t n_low = idx.size() - n_high;

      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.back().n_low = static_cast<std::uint32_t>(n_low);
      nodes.back().n_high = static_cast<std::uint32_t>(n_high);
      nodes.back().label = majority_label(n_low, n_high);

      const bool depth_reached = params.max_depth != 0 && depth >= params.max_depth;
      if (n_low == 0 || n_high == 0 || idx.size() < 2 || depth_reached) return id;

      const std::size_t d = data.dim();
      Split best;
      if (params.max_features == 0 || params.max_features >= d || rng == nullptr) {
        for (std::size_t f = 0; f < d; ++f) scan_feature(idx, f, n_high, best);
      } else {
        // Draw features without replacement until max_features non-constant
        // ones have been examined (or all features are exhausted).
        order.resize(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t examined = 0;
        for (std::size_t k = 0; k < d && examined < params.max_features; ++k) {
          const std::size_t j = k + rng->below(d - k);
          std::swap(order[k], order[j]);
          if (scan_feature(idx, order[k], n_high, best)) ++examined;
        }
      }
      if (!best.found) return id;

      std::vector<std::size_t> left, right;
      for (std::size_t r : idx) (data.x(r, best.feature) <= best.threshold ? left : right).push_back(r);
      idx.clear();
      idx.shrink_to_fit();

      const int l = build(left, depth + 1);
      const int rr = build(right, depth + 1);
      TreeNode& node = nodes[static_cast<std::size_t>(id)];
      node.feature = static_cast<int>(best.feature);
      node.threshold = best.threshold;
      node.left = l;
      node.right = rr;
      return id;
    }
  };

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

}  // namespace creak::ml
