#pragma once

// Discrete AdaBoost (SAMME, two classes) over depth-1 decision stumps.
//
// Each round fits the stump with the lowest weighted misclassification error
// (leaves take the weighted-majority label), then
//   alpha = learning_rate * ln((1 - err) / err)
//   w_i  <- w_i * exp(alpha * [stump misclassifies i]),  renormalized.
// A stump with zero error is kept with weight 1 and ends boosting; a stump no
// better than chance (err >= 0.5) ends boosting and is discarded, unless it is
// the first one.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "creak/ml/dataset.hpp"

namespace creak::ml {

struct AdaBoostParams {
  std::size_t n_estimators = 100;
  double learning_rate = 1.0;

  bool operator==(const AdaBoostParams&) const = default;
};

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  CreakLabel left = CreakLabel::Low;   // x[feature] <= threshold
  CreakLabel right = CreakLabel::High;

  CreakLabel predict(std::span<const double> x) const { return x[feature] <= threshold ? left : right; }
  bool operator==(const Stump&) const = default;
};

// Per-round bookkeeping, exposed for inspection and tests.
struct BoostRound {
  Stump stump;
  double error = 0.0;
  double alpha = 0.0;
  std::vector<double> weights_after;  // normalized sample weights after the update
};

namespace detail {

struct StumpFit {
  Stump stump;
  double error = 2.0;
};

// Exhaustive weighted stump search over presorted feature orders.
inline StumpFit fit_stump(const Dataset& data, const std::vector<std::vector<std::size_t>>& sorted,
                          const std::vector<double>& w) {
  StumpFit best;
  double total_high = 0.0, total_low = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) (data.y[i] == CreakLabel::High ? total_high : total_low) += w[i];

  // A split-free stump (both leaves the weighted majority) is the baseline.
  const CreakLabel maj = total_high > total_low ? CreakLabel::High : CreakLabel::Low;
  const double base_err = maj == CreakLabel::High ? total_low : total_high;

  for (std::size_t f = 0; f < data.dim(); ++f) {
    const auto& ord = sorted[f];
    double left_high = 0.0, left_low = 0.0;
    for (std::size_t k = 0; k + 1 < ord.size(); ++k) {
      const std::size_t r = ord[k];
      (data.y[r] == CreakLabel::High ? left_high : left_low) += w[r];
      const double v = data.x(r, f), next = data.x(ord[k + 1], f);
      if (v == next) continue;
      const double right_high = total_high - left_high, right_low = total_low - left_low;
      const CreakLabel l = left_high > left_low ? CreakLabel::High : CreakLabel::Low;
      const CreakLabel rl = right_high > right_low ? CreakLabel::High : CreakLabel::Low;
      const double err = (l == CreakLabel::High ? left_low : left_high) + (rl == CreakLabel::High ? right_low : right_high);
      if (err < best.error) {
        double thr = 0.5 * (v + next);
        if (thr >= next) thr = v;
        best.error = err;
        best.stump = {f, thr, l, rl};
      }
    }
  }
  if (best.error > 1.0) {
    best.stump = {0, 0.0, maj, maj};
    best.error = base_err;
  }
  return best;
}

}  // namespace detail

class AdaBoost {
 public:
  AdaBoost() = default;
  AdaBoost(std::vector<Stump> stumps, std::vector<double> alphas, std::size_t n_features)
      : stumps_(std::move(stumps)), alphas_(std::move(alphas)), n_features_(n_features) {}

  static AdaBoost fit(const Dataset& data, const AdaBoostParams& p, std::vector<BoostRound>* trace = nullptr) {
    validate_training(data);
    if (p.n_estimators == 0) throw TrainingError("adaboost: n_estimators must be positive");
    if (!(p.learning_rate > 0.0)) throw TrainingError("adaboost: learning_rate must be positive");
    const std::size_t n = data.size();
    std::vector<std::vector<std::size_t>> sorted(data.dim(), std::vector<std::size_t>(n));
    for (std::size_t f = 0; f < data.dim(); ++f) {
      auto& ord = sorted[f];
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return data.x(a, f) < data.x(b, f); });
    }

    AdaBoost model;
    model.n_features_ = data.dim();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    for (std::size_t round = 0; round < p.n_estimators; ++round) {
      const detail::StumpFit fit = detail::fit_stump(data, sorted, w);
      const double err = fit.error;
      if (err <= 0.0) {
        model.stumps_.push_back(fit.stump);
        model.alphas_.push_back(1.0);
        if (trace) trace->push_back({fit.stump, err, 1.0, w});
        break;
      }
      if (err >= 0.5) {
        if (model.stumps_.empty()) {
          model.stumps_.push_back(fit.stump);
          model.alphas_.push_back(1.0);
          if (trace) trace->push_back({fit.stump, err, 1.0, w});
        }
        break;
      }
      const double alpha = p.learning_rate * std::log((1.0 - err) / err);
      const double boost = std::exp(alpha);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fit.stump.predict(data.x.row(i)) != data.y[i]) w[i] *= boost;
        total += w[i];
      }
      for (double& wi : w) wi /= total;
      model.stumps_.push_back(fit.stump);
      model.alphas_.push_back(alpha);
      if (trace) trace->push_back({fit.stump, err, alpha, w});
    }
    return model;
  }

  // Weighted vote, +alpha for High and -alpha for Low.
  double decision(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t m = 0; m < stumps_.size(); ++m) s += alphas_[m] * sign_of(stumps_[m].predict(x));
    return s;
  }

  CreakLabel predict(std::span<const double> x) const {
    check_dim(x, n_features_);
    return decision(x) > 0.0 ? CreakLabel::High : CreakLabel::Low;
  }

  const std::vector<Stump>& stumps() const { return stumps_; }
  const std::vector<double>& alphas() const { return alphas_; }
  std::size_t n_features() const { return n_features_; }

 private:
  std::vector<Stump> stumps_;
  std::vector<double> alphas_;
  std::size_t n_features_ = 0;
};

}  // namespace creak::ml
