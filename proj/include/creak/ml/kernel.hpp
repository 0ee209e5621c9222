#pragma once

#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "creak/matrix.hpp"

namespace creak::ml {

enum class KernelType { Linear, Rbf };

struct Kernel {
  KernelType type = KernelType::Linear;
  double gamma = 0.1;

  double operator()(std::span<const double> u, std::span<const double> v) const {
    if (type == KernelType::Linear) {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
      return s;
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u[i] - v[i];
      d2 += d * d;
    }
    return std::exp(-gamma * d2);
  }

  bool operator==(const Kernel&) const = default;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorMatrix> as_eigen(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

// Full N x N kernel matrix.
inline Eigen::MatrixXd gram_matrix(const Matrix& x, const Kernel& k) {
  const auto xe = as_eigen(x);
  Eigen::MatrixXd g = xe * xe.transpose();
  if (k.type == KernelType::Rbf) {
    const Eigen::VectorXd sq = g.diagonal();
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * g(i, j));
        g(i, j) = std::exp(-k.gamma * d2);
      }
    g.diagonal().setOnes();
  }
  return g;
}

}  // namespace creak::ml
