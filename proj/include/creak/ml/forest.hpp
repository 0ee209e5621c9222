#pragma once

// Random forest: bootstrap-sampled CART trees with sqrt(D) candidate features
// per split, combined by majority vote (ties go to Low). Tree t draws all its
// randomness from derive_seed(seed, t), so trees can be built in any order.

#include <cmath>
#include <span>
#include <vector>

#include "creak/ml/dataset.hpp"
#include "creak/ml/tree.hpp"
#include "creak/rng.hpp"

namespace creak::ml {

struct ForestParams {
  std::size_t n_estimators = 100;
  std::size_t max_depth = 0;  // 0 = unbounded

  bool operator==(const ForestParams&) const = default;
};

class RandomForest {
 public:
  RandomForest() = default;
  explicit RandomForest(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

  static RandomForest fit(const Dataset& data, const ForestParams& p, std::uint64_t seed) {
    validate_training(data);
    if (p.n_estimators == 0) throw TrainingError("random forest: n_estimators must be positive");
    const std::size_t n = data.size();
    TreeParams tp;
    tp.max_depth = p.max_depth;
    tp.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.dim()))));
    RandomForest forest;
    forest.trees_.reserve(p.n_estimators);
    std::vector<std::size_t> rows(n);
    for (std::size_t t = 0; t < p.n_estimators; ++t) {
      Rng rng(derive_seed(seed, t));
      for (auto& r : rows) r = rng.below(n);
      forest.trees_.push_back(DecisionTree::fit(data, rows, tp, &rng));
    }
    return forest;
  }

  // Votes for High among all trees.
  std::size_t high_votes(std::span<const double> x) const {
    std::size_t high = 0;
    for (const auto& t : trees_) high += t.predict(x) == CreakLabel::High;
    return high;
  }

  CreakLabel predict(std::span<const double> x) const {
    if (trees_.empty()) throw InvalidInput("random forest: model has no trees");
    const std::size_t high = high_votes(x);
    return majority_label(trees_.size() - high, high);
  }

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
};

}  // namespace creak::ml
