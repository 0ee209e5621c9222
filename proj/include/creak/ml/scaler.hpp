#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "creak/error.hpp"
#include "creak/matrix.hpp"

namespace creak::ml {

inline constexpr double kStdFloor = 1e-8;

// Column-wise z-score normalization with statistics from training rows only.
struct ZScoreScaler {
  std::vector<double> mean;
  std::vector<double> std;  // floored at kStdFloor

  std::size_t dim() const { return mean.size(); }

  void transform_in_place(std::span<double> x) const {
    if (x.size() != mean.size()) throw InvalidInput("scaler: dimension mismatch");
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) / std[j];
  }

  std::vector<double> transform(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    transform_in_place(out);
    return out;
  }

  Matrix transform(const Matrix& x) const {
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) transform_in_place(out.row(i));
    return out;
  }

  bool operator==(const ZScoreScaler&) const = default;
};

// Fits on the listed rows of x. If `touched` is given, every row index the
// fit reads is appended to it (used to audit train/test separation).
inline ZScoreScaler fit_scaler(const Matrix& x, std::span<const std::size_t> rows,
                               std::vector<std::size_t>* touched = nullptr) {
  if (rows.empty()) throw InvalidInput("fit_scaler: no training rows");
  const std::size_t d = x.cols();
  ZScoreScaler s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (std::size_t r : rows) {
    if (touched) touched->push_back(r);
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= n;
  for (std::size_t r : rows) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - s.mean[j];
      s.std[j] += dev * dev;
    }
  }
  for (double& v : s.std) v = std::max(std::sqrt(v / n), kStdFloor);
  return s;
}

inline ZScoreScaler fit_scaler(const Matrix& x) {
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return fit_scaler(x, all);
}

// Scaler that leaves data unchanged.
inline ZScoreScaler identity_scaler(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

}  // namespace creak::ml
