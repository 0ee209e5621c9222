#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "creak/corpus.hpp"
#include "creak/error.hpp"
#include "creak/matrix.hpp"

namespace creak::ml {

struct Dataset {
  Matrix x;
  std::vector<CreakLabel> y;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
};

// +1 for High, -1 for Low.
inline double sign_of(CreakLabel l) { return l == CreakLabel::High ? 1.0 : -1.0; }

inline void validate_training(const Dataset& d) {
  if (d.x.rows() != d.y.size()) throw TrainingError("dataset: feature rows and labels differ in count");
  if (d.size() < 2) throw TrainingError("dataset: need at least two samples");
  bool low = false, high = false;
  for (CreakLabel l : d.y) (l == CreakLabel::Low ? low : high) = true;
  if (!low || !high) throw TrainingError("dataset: training data contains a single class");
  for (double v : d.x.data())
    if (!std::isfinite(v)) throw TrainingError("dataset: non-finite feature value");
}

inline void check_dim(std::span<const double> x, std::size_t expected) {
  if (x.size() != expected)
    throw InvalidInput("predict: feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                       std::to_string(expected));
}

}  // namespace creak::ml
