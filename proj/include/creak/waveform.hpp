#pragma once

#include <cstddef>
#include <vector>

namespace creak {

// Mono signal with amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

}  // namespace creak
