#pragma once

// Soft-margin binary SVM trained with SMO using second-order working-set
// selection (the maximal-violating-pair variant with curvature, as in
// LIBSVM). No shrinking; the full kernel matrix is kept in memory.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "creak/ml/dataset.hpp"
#include "creak/ml/kernel.hpp"

namespace creak::ml {

struct SvmParams {
  double c = 1.0;
  Kernel kernel{};
  double tolerance = 1e-3;  // stop when the maximal KKT violation gap is below this

  bool operator==(const SvmParams&) const = default;
};

struct SvmModel {
  Kernel kernel;
  Matrix support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;          // decision = sum coef_i K(sv_i, x) - rho
  std::vector<double> weights;  // primal weights, linear kernel only
  bool converged = true;
  std::size_t iterations = 0;

  double decision(std::span<const double> x) const {
    if (kernel.type == KernelType::Linear && !weights.empty()) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += weights[j] * x[j];
      return s - rho;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * kernel(support_vectors.row(i), x);
    return s - rho;
  }

  CreakLabel predict(std::span<const double> x) const {
    check_dim(x, support_vectors.cols());
    return decision(x) > 0.0 ? CreakLabel::High : CreakLabel::Low;
  }

  // Largest violation of the soft-margin KKT conditions on `data`, given the
  // full dual vector `alpha`. Computed from the kernel directly.
  static double kkt_violation(const Dataset& data, const std::vector<double>& alpha, double rho, const SvmParams& p) {
    double worst = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double f = -rho;
      for (std::size_t j = 0; j < data.size(); ++j)
        if (alpha[j] != 0.0) f += alpha[j] * sign_of(data.y[j]) * p.kernel(data.x.row(j), data.x.row(i));
      const double margin = sign_of(data.y[i]) * f;
      double v = 0.0;
      if (alpha[i] <= 0.0)
        v = std::max(0.0, 1.0 - margin);
      else if (alpha[i] >= p.c)
        v = std::max(0.0, margin - 1.0);
      else
        v = std::abs(margin - 1.0);
      worst = std::max(worst, v);
    }
    return worst;
  }
};

struct SvmSolution {
  SvmModel model;
  std::vector<double> alpha;  // one per training row
};

inline SvmSolution train_svm_with_dual(const Dataset& data, const SvmParams& p) {
  validate_training(data);
  const std::size_t n = data.size();
  const double c = p.c;
  constexpr double tau = 1e-12;
  constexpr double inf = std::numeric_limits<double>::infinity();

  const Eigen::MatrixXd k = gram_matrix(data.x, p.kernel);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(data.y[i]);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto is_upper = [&](std::size_t i) { return alpha[i] >= c; };
  auto is_lower = [&](std::size_t i) { return alpha[i] <= 0.0; };
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };

  const std::size_t max_iter = std::max<std::size_t>(10000000, 100 * n);
  std::size_t iter = 0;
  bool converged = false;
  while (iter < max_iter) {
    // working set selection
    double gmax = -inf, gmax2 = -inf;
    std::size_t i_sel = n, j_sel = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!is_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i_sel = t;
        }
      } else {
        if (!is_lower(t) && grad[t] >= gmax) {
          gmax = grad[t];
          i_sel = t;
        }
      }
    }
    double obj_min = inf;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!is_lower(t)) {
          const double grad_diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (grad_diff > 0 && i_sel < n) {
            const double quad = k(static_cast<Eigen::Index>(i_sel), static_cast<Eigen::Index>(i_sel)) +
                                k(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) -
                                2.0 * y[i_sel] * q(i_sel, t);
            const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
            if (obj <= obj_min) {
              j_sel = t;
              obj_min = obj;
            }
          }
        }
      } else {
        if (!is_upper(t)) {
          const double grad_diff = gmax - grad[t];
          gmax2 = std::max(gmax2, -grad[t]);
          if (grad_diff > 0 && i_sel < n) {
            const double quad = k(static_cast<Eigen::Index>(i_sel), static_cast<Eigen::Index>(i_sel)) +
                                k(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) +
                                2.0 * y[i_sel] * q(i_sel, t);
            const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
            if (obj <= obj_min) {
              j_sel = t;
              obj_min = obj;
            }
          }
        }
      }
    }
    if (gmax + gmax2 < p.tolerance || j_sel == n || i_sel == n) {
      converged = true;
      break;
    }
    ++iter;

    const std::size_t i = i_sel, j = j_sel;
    const double old_ai = alpha[i], old_aj = alpha[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else {
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = -diff;
        }
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = c + diff;
        }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else {
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * dai + q(t, j) * daj;
  }

  // bias from free vectors, else the midpoint of the feasible interval
  double ub = inf, lb = -inf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (is_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  SvmSolution sol;
  sol.alpha = alpha;
  SvmModel& m = sol.model;
  m.kernel = p.kernel;
  m.rho = rho;
  m.converged = converged;
  m.iterations = iter;
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0) sv.push_back(t);
  m.support_vectors = data.x.select_rows(sv);
  for (std::size_t t : sv) m.coef.push_back(alpha[t] * y[t]);
  if (p.kernel.type == KernelType::Linear) {
    m.weights.assign(data.dim(), 0.0);
    for (std::size_t s = 0; s < sv.size(); ++s) {
      const auto row = m.support_vectors.row(s);
      for (std::size_t j = 0; j < row.size(); ++j) m.weights[j] += m.coef[s] * row[j];
    }
  }
  return sol;
}

inline SvmModel train_svm(const Dataset& data, const SvmParams& p) { return train_svm_with_dual(data, p).model; }

}  // namespace creak::ml
