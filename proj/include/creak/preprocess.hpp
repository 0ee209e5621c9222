#pragma once

// Peak normalization, energy-based silence removal and sample-rate
// conversion. Pipeline order is normalize -> trim -> resample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "creak/error.hpp"
#include "creak/waveform.hpp"

namespace creak {

struct PreprocessConfig {
  double threshold_db = -40.0;
  double min_silence_s = 0.2;
  double target_rate = 8000.0;

  bool operator==(const PreprocessConfig&) const = default;
};

inline double peak_abs(const std::vector<double>& x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

inline Waveform peak_normalize(const Waveform& w) {
  const double peak = peak_abs(w.samples);
  if (!(peak > 0.0) || !std::isfinite(peak)) throw InvalidInput("peak_normalize: signal is all zeros or non-finite");
  Waveform out{w.samples, w.sample_rate};
  for (double& v : out.samples) v /= peak;
  return out;
}

namespace trim {
inline constexpr double kWindowS = 0.025;
inline constexpr double kHopS = 0.010;
}  // namespace trim

// Deletes runs of quiet 25 ms windows (10 ms hop) spanning at least
// min_silence_s. A window is quiet when its RMS is below threshold_db
// relative to the signal peak.
inline Waveform trim_silence(const Waveform& w, double threshold_db = -40.0, double min_silence_s = 0.2) {
  if (!(threshold_db < 0.0)) throw InvalidInput("trim_silence: threshold_db must be negative");
  if (!(min_silence_s > 0.0)) throw InvalidInput("trim_silence: min_silence_s must be positive");
  if (w.empty() || w.sample_rate <= 0) throw InvalidInput("trim_silence: empty waveform");

  const std::size_t n = w.size();
  const std::size_t win = std::min(n, std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(trim::kWindowS * w.sample_rate))));
  const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(trim::kHopS * w.sample_rate)));
  const std::size_t n_win = (n - win) / hop + 1;

  const double peak = peak_abs(w.samples);
  if (!(peak > 0.0)) throw InvalidInput("trim_silence: entire signal is below the silence threshold");
  const double threshold = peak * std::pow(10.0, threshold_db / 20.0);
  const double threshold_energy = threshold * threshold * static_cast<double>(win);

  std::vector<char> quiet(n_win);
  for (std::size_t i = 0; i < n_win; ++i) {
    double e = 0.0;
    for (std::size_t k = i * hop; k < i * hop + win; ++k) e += w.samples[k] * w.samples[k];
    quiet[i] = e < threshold_energy;
  }
  if (std::all_of(quiet.begin(), quiet.end(), [](char q) { return q != 0; }))
    throw InvalidInput("trim_silence: entire signal is below the silence threshold");

  const double min_len = min_silence_s * w.sample_rate;
  std::vector<char> drop(n, 0);
  for (std::size_t i = 0; i < n_win;) {
    if (!quiet[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n_win && quiet[j + 1]) ++j;
    const std::size_t begin = i * hop;
    const std::size_t end = j * hop + win;
    if (static_cast<double>(end - begin) >= min_len) std::fill(drop.begin() + begin, drop.begin() + end, 1);
    i = j + 1;
  }

  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    if (!drop[k]) out.samples.push_back(w.samples[k]);
  if (out.empty()) throw InvalidInput("trim_silence: nothing left after silence removal");
  return out;
}

namespace resampling {

inline constexpr double kStopbandDb = 80.0;
// Passband edge and stopband edge as fractions of the lower Nyquist rate.
inline constexpr double kPassEdge = 0.85;
inline constexpr double kStopEdge = 1.0;

inline double kaiser_beta(double atten_db) {
  if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
  if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
  return 0.0;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = 3.14159265358979323846 * x;
  return std::sin(px) / px;
}

// Kaiser-windowed sinc lowpass evaluated at offset t (input samples).
struct Kernel {
  double cutoff;     // cycles per input sample
  double half_width; // input samples
  double beta;
  double i0_beta;

  double operator()(double t) const {
    if (std::abs(t) >= half_width) return 0.0;
    const double r = t / half_width;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
    return 2.0 * cutoff * sinc(2.0 * cutoff * t) * win;
  }
};

inline Kernel design(double source_rate, double target_rate) {
  const double nyq_ratio = std::min(1.0, target_rate / source_rate);  // lower Nyquist / input Nyquist
  const double pass = kPassEdge * 0.5 * nyq_ratio;                    // cycles per input sample
  const double stop = kStopEdge * 0.5 * nyq_ratio;
  const double transition = 2.0 * 3.14159265358979323846 * (stop - pass);  // rad/sample
  const double taps = (kStopbandDb - 7.95) / (2.285 * transition);
  Kernel k;
  k.cutoff = 0.5 * (pass + stop);
  k.half_width = std::ceil(taps / 2.0) + 1.0;
  k.beta = kaiser_beta(kStopbandDb);
  k.i0_beta = std::cyl_bessel_i(0.0, k.beta);
  return k;
}

}  // namespace resampling

// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel
// (>= 80 dB design stopband). Output length is round(len * target / source).
inline Waveform resample(const Waveform& w, double target_rate) {
  if (!(target_rate > 0.0)) throw InvalidInput("resample: target rate must be positive");
  if (!(w.sample_rate > 0.0)) throw InvalidInput("resample: source rate must be positive");
  if (target_rate == w.sample_rate) return w;

  const double ratio = target_rate / w.sample_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(w.size()) * ratio));
  const resampling::Kernel kernel = resampling::design(w.sample_rate, target_rate);
  const auto reach = static_cast<std::ptrdiff_t>(kernel.half_width);
  const auto n_in = static_cast<std::ptrdiff_t>(w.size());

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.assign(out_len, 0.0);

  // Integer rates give a rational ratio L/M; output phases then repeat every
  // L samples and the kernel taps can be tabulated once per phase.
  const auto src_int = static_cast<std::int64_t>(std::llround(w.sample_rate));
  const auto dst_int = static_cast<std::int64_t>(std::llround(target_rate));
  const bool rational = static_cast<double>(src_int) == w.sample_rate && static_cast<double>(dst_int) == target_rate;
  const std::int64_t g = rational ? std::gcd(src_int, dst_int) : 1;
  const std::int64_t up = rational ? dst_int / g : 0;    // L
  const std::int64_t down = rational ? src_int / g : 0;  // M
  const std::size_t span_len = static_cast<std::size_t>(2 * reach + 1);

  if (rational && up <= 4096) {
    std::vector<double> table(static_cast<std::size_t>(up) * span_len);
    for (std::int64_t p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(up);
      for (std::ptrdiff_t j = -reach; j <= reach; ++j)
        table[static_cast<std::size_t>(p) * span_len + static_cast<std::size_t>(j + reach)] =
            kernel(frac - static_cast<double>(j));
    }
    for (std::size_t n = 0; n < out_len; ++n) {
      const std::int64_t num = static_cast<std::int64_t>(n) * down;
      const std::int64_t base = num / up;
      const std::int64_t phase = num % up;
      const double* taps = &table[static_cast<std::size_t>(phase) * span_len];
      double acc = 0.0;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-reach, -base);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(reach, n_in - 1 - base);
      for (std::ptrdiff_t j = lo; j <= hi; ++j) acc += w.samples[static_cast<std::size_t>(base + j)] * taps[j + reach];
      out.samples[n] = acc;
    }
    return out;
  }

  for (std::size_t n = 0; n < out_len; ++n) {
    const double pos = static_cast<double>(n) / ratio;
    const auto base = static_cast<std::ptrdiff_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(base);
    double acc = 0.0;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-reach, -base);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(reach, n_in - 1 - base);
    for (std::ptrdiff_t j = lo; j <= hi; ++j)
      acc += w.samples[static_cast<std::size_t>(base + j)] * kernel(frac - static_cast<double>(j));
    out.samples[n] = acc;
  }
  return out;
}

// normalize -> trim -> resample.
inline Waveform preprocess(const Waveform& raw, const PreprocessConfig& cfg) {
  Waveform w = peak_normalize(raw);
  w = trim_silence(w, cfg.threshold_db, cfg.min_silence_s);
  return resample(w, cfg.target_rate);
}

}  // namespace creak
