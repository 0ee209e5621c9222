#pragma once

// One-hidden-layer perceptron: ReLU hidden units, sigmoid output,
// binary cross-entropy plus 0.5 * alpha * ||W||^2 / batch_size, trained with
// Adam on shuffled mini-batches. Training stops after max_epochs or when the
// epoch loss has not improved by `tol` for `n_iter_no_change` epochs; the
// parameters with the lowest epoch loss are returned.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "creak/ml/dataset.hpp"
#include "creak/ml/kernel.hpp"
#include "creak/rng.hpp"

namespace creak::ml {

struct MlpParams {
  std::size_t hidden = 100;
  double alpha = 0.01;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 200;  // capped at N
  std::size_t max_epochs = 200;
  double tol = 1e-4;
  std::size_t n_iter_no_change = 10;

  bool operator==(const MlpParams&) const = default;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::VectorXd w2, double b2)
      : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(b2) {}

  static Mlp fit(const Dataset& data, const MlpParams& p, std::uint64_t seed,
                 std::vector<double>* loss_trace = nullptr) {
    validate_training(data);
    if (p.hidden == 0 || p.max_epochs == 0) throw TrainingError("mlp: hidden size and epochs must be positive");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(data.dim());
    const auto h = static_cast<Eigen::Index>(p.hidden);
    const Eigen::Index batch = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::max<std::size_t>(1, p.batch_size)), n);

    Rng rng(seed);
    Mlp m;
    const double bound1 = std::sqrt(6.0 / static_cast<double>(d + h));
    const double bound2 = std::sqrt(6.0 / static_cast<double>(h + 1));
    m.w1_.resize(d, h);
    for (Eigen::Index j = 0; j < h; ++j)
      for (Eigen::Index i = 0; i < d; ++i) m.w1_(i, j) = rng.uniform(-bound1, bound1);
    m.b1_ = Eigen::VectorXd::Zero(h);
    m.w2_.resize(h);
    for (Eigen::Index i = 0; i < h; ++i) m.w2_(i) = rng.uniform(-bound2, bound2);
    m.b2_ = 0.0;

    // Adam state
    Eigen::MatrixXd mw1 = Eigen::MatrixXd::Zero(d, h), vw1 = Eigen::MatrixXd::Zero(d, h);
    Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(h), vb1 = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd mw2 = Eigen::VectorXd::Zero(h), vw2 = Eigen::VectorXd::Zero(h);
    double mb2 = 0.0, vb2 = 0.0;
    std::size_t step = 0;

    const auto x_all = as_eigen(data.x);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Mlp best = m;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t no_improvement = 0;
    std::size_t epochs = 0;
    bool converged = false;

    RowMajorMatrix xb;
    Eigen::VectorXd yb;
    Eigen::MatrixXd gw1(d, h);
    Mlp epoch_start;
    for (std::size_t epoch = 0; epoch < p.max_epochs; ++epoch) {
      epoch_start = m;
      rng.shuffle(order);
      double epoch_loss = 0.0;
      for (Eigen::Index start = 0; start < n; start += batch) {
        const Eigen::Index bs = std::min(batch, n - start);
        xb.resize(bs, d);
        yb.resize(bs);
        for (Eigen::Index r = 0; r < bs; ++r) {
          const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
          xb.row(r) = x_all.row(src);
          yb(r) = data.y[static_cast<std::size_t>(src)] == CreakLabel::High ? 1.0 : 0.0;
        }
        const double bsd = static_cast<double>(bs);

        Eigen::MatrixXd z1 = xb * m.w1_;
        z1.rowwise() += m.b1_.transpose();
        const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
        const Eigen::VectorXd z2 = (a1 * m.w2_).array() + m.b2_;

        double loss = 0.0;
        Eigen::VectorXd dz2(bs);
        for (Eigen::Index r = 0; r < bs; ++r) {
          const double z = z2(r);
          // -[y log p + (1-y) log(1-p)] with p = sigmoid(z)
          loss += std::max(z, 0.0) - z * yb(r) + std::log1p(std::exp(-std::abs(z)));
          const double prob = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
          dz2(r) = (prob - yb(r)) / bsd;
        }
        loss /= bsd;
        loss += 0.5 * p.alpha * (m.w1_.squaredNorm() + m.w2_.squaredNorm()) / bsd;
        epoch_loss += loss * bsd;

        const Eigen::VectorXd gw2 = a1.transpose() * dz2 + (p.alpha / bsd) * m.w2_;
        const double gb2 = dz2.sum();
        Eigen::MatrixXd da1 = dz2 * m.w2_.transpose();
        da1 = (z1.array() > 0.0).select(da1, 0.0);
        gw1.noalias() = xb.transpose() * da1;
        gw1 += (p.alpha / bsd) * m.w1_;
        const Eigen::VectorXd gb1 = da1.colwise().sum().transpose();

        ++step;
        const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
        const double lr = p.learning_rate * std::sqrt(c2) / c1;
        auto adam = [&](auto& param, auto& mom, auto& vel, const auto& g) {
          mom = p.beta1 * mom + (1.0 - p.beta1) * g;
          vel = p.beta2 * vel + (1.0 - p.beta2) * g.cwiseProduct(g);
          param.array() -= lr * mom.array() / (vel.array().sqrt() + p.epsilon);
        };
        adam(m.w1_, mw1, vw1, gw1);
        adam(m.b1_, mb1, vb1, gb1);
        adam(m.w2_, mw2, vw2, gw2);
        mb2 = p.beta1 * mb2 + (1.0 - p.beta1) * gb2;
        vb2 = p.beta2 * vb2 + (1.0 - p.beta2) * gb2 * gb2;
        m.b2_ -= lr * mb2 / (std::sqrt(vb2) + p.epsilon);
      }
      epoch_loss /= static_cast<double>(n);
      if (loss_trace) loss_trace->push_back(epoch_loss);

      ++epochs;
      // The epoch loss is measured along the way from the epoch's starting
      // parameters (exactly at them when one batch covers the data).
      if (epoch_loss > best_loss - p.tol)
        ++no_improvement;
      else
        no_improvement = 0;
      if (epoch_loss < best_loss) {
        best_loss = epoch_loss;
        best = epoch_start;
      }
      if (no_improvement > p.n_iter_no_change) {
        converged = true;
        break;
      }
    }
    best.epochs_ = epochs;
    best.converged_ = converged;
    return best;
  }

  double decision(std::span<const double> x) const {
    check_dim(x, static_cast<std::size_t>(w1_.rows()));
    const Eigen::Map<const Eigen::RowVectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::RowVectorXd a1 = ((xv * w1_) + b1_.transpose()).cwiseMax(0.0);
    return a1.dot(w2_) + b2_;
  }

  double probability_high(std::span<const double> x) const { return 1.0 / (1.0 + std::exp(-decision(x))); }

  CreakLabel predict(std::span<const double> x) const {
    return decision(x) > 0.0 ? CreakLabel::High : CreakLabel::Low;
  }

  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::VectorXd& w2() const { return w2_; }
  double b2() const { return b2_; }
  std::size_t epochs() const { return epochs_; }
  bool converged() const { return converged_; }

 private:
  Eigen::MatrixXd w1_;  // D x H
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_ = 0.0;
  std::size_t epochs_ = 0;
  bool converged_ = false;
};

}  // namespace creak::ml
