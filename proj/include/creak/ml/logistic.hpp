#pragma once

// L2-regularized logistic regression,
//   minimize 0.5 ||w||^2 + C sum_i log(1 + exp(-y_i (w.x_i + b))),
// solved with L-BFGS and a backtracking (Armijo) line search. The intercept
// is not penalized.

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "creak/ml/dataset.hpp"
#include "creak/ml/kernel.hpp"

namespace creak::ml {

struct LogisticParams {
  double c = 1.0;
  double grad_tolerance = 1e-5;  // Euclidean norm of the full gradient
  std::size_t max_iterations = 1000;
  std::size_t memory = 10;

  bool operator==(const LogisticParams&) const = default;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
  double final_grad_norm = 0.0;

  double decision(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
    return z;
  }

  double probability_high(std::span<const double> x) const { return 1.0 / (1.0 + std::exp(-decision(x))); }

  CreakLabel predict(std::span<const double> x) const {
    check_dim(x, weights.size());
    return decision(x) > 0.0 ? CreakLabel::High : CreakLabel::Low;
  }
};

namespace detail {

// log(1 + exp(-m)) without overflow.
inline double softplus_neg(double m) { return std::max(-m, 0.0) + std::log1p(std::exp(-std::abs(m))); }

class LogisticObjective {
 public:
  LogisticObjective(const Dataset& d, double c) : x_(as_eigen(d.x)), y_(d.size()), c_(c) {
    for (std::size_t i = 0; i < d.size(); ++i) y_(static_cast<Eigen::Index>(i)) = sign_of(d.y[i]);
  }

  Eigen::Index dim() const { return x_.cols() + 1; }

  // theta = [w; b]. Returns the objective and fills grad.
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    const Eigen::Index d = x_.cols();
    const auto w = theta.head(d);
    const double b = theta(d);
    const Eigen::VectorXd z = (x_ * w).array() + b;
    double loss = 0.5 * w.squaredNorm();
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double m = y_(i) * z(i);
      loss += c_ * softplus_neg(m);
      // d/dz of softplus(-y z) = -y * sigmoid(-m)
      const double s = m >= 0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
      r(i) = -c_ * y_(i) * s;
    }
    grad.resize(d + 1);
    grad.head(d) = w + x_.transpose() * r;
    grad(d) = r.sum();
    return loss;
  }

 private:
  Eigen::Map<const RowMajorMatrix> x_;
  Eigen::VectorXd y_;
  double c_;
};

}  // namespace detail

// `loss_trace`, when given, receives the objective at every accepted iterate.
inline LogisticModel train_logistic(const Dataset& data, const LogisticParams& p,
                                    std::vector<double>* loss_trace = nullptr) {
  validate_training(data);
  const detail::LogisticObjective obj(data, p.c);
  const Eigen::Index n = obj.dim();

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n);
  double f = obj.evaluate(theta, grad);
  if (loss_trace) loss_trace->push_back(f);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  LogisticModel model;
  model.converged = false;
  std::size_t iter = 0;
  Eigen::VectorXd new_theta(n), new_grad(n);

  while (iter < p.max_iterations) {
    if (grad.norm() <= p.grad_tolerance) {
      model.converged = true;
      break;
    }
    // two-loop recursion
    Eigen::VectorXd q = grad;
    std::vector<double> a(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      a[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= a[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (a[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    double slope = grad.dot(dir);
    if (!(slope < 0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -grad;
      slope = -grad.squaredNorm();
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / grad.norm()) : 1.0;
    bool accepted = false;
    double new_f = f;
    for (int ls = 0; ls < 60; ++ls) {
      new_theta = theta + step * dir;
      new_f = obj.evaluate(new_theta, new_grad);
      if (new_f <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable; keep best iterate

    Eigen::VectorXd s = new_theta - theta;
    Eigen::VectorXd yv = new_grad - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * yv.squaredNorm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > p.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(new_theta);
    grad.swap(new_grad);
    f = new_f;
    ++iter;
    if (loss_trace) loss_trace->push_back(f);
  }
  if (!model.converged && grad.norm() <= p.grad_tolerance) model.converged = true;

  const Eigen::Index d = n - 1;
  model.weights.assign(theta.data(), theta.data() + d);
  model.intercept = theta(d);
  model.iterations = iter;
  model.final_grad_norm = grad.norm();
  return model;
}

}  // namespace creak::ml
