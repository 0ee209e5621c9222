#pragma once

// Frame-level spectral features (log spectrogram, log-mel spectrogram,
// MFCC + deltas) and their aggregation into one fixed-length vector per
// recording via eight statistical functionals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "creak/error.hpp"
#include "creak/fft.hpp"
#include "creak/matrix.hpp"
#include "creak/waveform.hpp"

namespace creak {

enum class FeatureKind { Spectrogram, MelSpectrogram, Mfcc };

inline constexpr std::array<FeatureKind, 3> kAllFeatureKinds{FeatureKind::Spectrogram, FeatureKind::MelSpectrogram,
                                                             FeatureKind::Mfcc};

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Spectrogram: return "spectrogram";
    case FeatureKind::MelSpectrogram: return "melspectrogram";
    case FeatureKind::Mfcc: return "mfcc";
  }
  return "?";
}

inline const char* display_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Spectrogram: return "Spectrogram";
    case FeatureKind::MelSpectrogram: return "Mel-spectrogram";
    case FeatureKind::Mfcc: return "MFCCs";
  }
  return "?";
}

inline FeatureKind feature_kind_from_string(std::string_view s) {
  for (FeatureKind k : kAllFeatureKinds)
    if (s == to_string(k)) return k;
  if (s == "spec") return FeatureKind::Spectrogram;
  if (s == "mel" || s == "mel-spectrogram") return FeatureKind::MelSpectrogram;
  throw InvalidInput("unknown feature kind: " + std::string(s));
}

struct FeatureConfig {
  double frame_length_ms = 100.0;
  double frame_shift_ms = 5.0;
  std::size_t fft_size = 1024;
  std::size_t n_mels = 128;
  std::size_t n_mfcc = 13;
  std::size_t delta_window = 9;

  std::size_t frame_length(double rate) const {
    return static_cast<std::size_t>(std::llround(frame_length_ms * rate / 1000.0));
  }
  std::size_t frame_shift(double rate) const {
    return static_cast<std::size_t>(std::llround(frame_shift_ms * rate / 1000.0));
  }

  bool operator==(const FeatureConfig&) const = default;
};

inline void validate(const FeatureConfig& cfg, double rate) {
  if (!(rate > 0)) throw InvalidInput("feature extraction: sample rate must be positive");
  if (!is_power_of_two(cfg.fft_size)) throw InvalidInput("feature extraction: fft_size must be a power of two");
  const std::size_t len = cfg.frame_length(rate);
  if (len == 0 || cfg.frame_shift(rate) == 0) throw InvalidInput("feature extraction: frame length/shift too small");
  if (len > cfg.fft_size)
    throw InvalidInput("feature extraction: frame of " + std::to_string(len) + " samples exceeds FFT size " +
                       std::to_string(cfg.fft_size) + " at " + std::to_string(rate) + " Hz");
  if (cfg.n_mels < cfg.n_mfcc + 1) throw InvalidInput("feature extraction: n_mels must exceed n_mfcc");
  if (cfg.delta_window < 3 || cfg.delta_window % 2 == 0)
    throw InvalidInput("feature extraction: delta_window must be odd and >= 3");
}

inline std::size_t frame_dim(FeatureKind k, const FeatureConfig& cfg) {
  switch (k) {
    case FeatureKind::Spectrogram: return cfg.fft_size / 2 + 1;
    case FeatureKind::MelSpectrogram: return cfg.n_mels;
    case FeatureKind::Mfcc: return 3 * cfg.n_mfcc;
  }
  return 0;
}

inline constexpr std::size_t kNumFunctionals = 8;

inline std::size_t feature_dim(FeatureKind k, const FeatureConfig& cfg) { return kNumFunctionals * frame_dim(k, cfg); }

// T x D frame-level features of one kind.
struct FrameMatrix {
  Matrix frames;
  FeatureKind kind = FeatureKind::Spectrogram;
};

struct SampleFeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::Spectrogram;
};

inline constexpr double kLogFloor = 1e-10;

// ---- framing ---------------------------------------------------------------

inline std::size_t frame_count(std::size_t n, std::size_t len, std::size_t hop) {
  if (len == 0 || hop == 0 || n < len) return 0;
  return (n - len) / hop + 1;
}

// Views into w; the final partial frame is dropped.
inline std::vector<std::span<const double>> frame_signal(const Waveform& w, const FeatureConfig& cfg) {
  const std::size_t len = cfg.frame_length(w.sample_rate);
  const std::size_t hop = cfg.frame_shift(w.sample_rate);
  if (len == 0 || hop == 0) throw InvalidInput("frame_signal: frame length/shift rounds to zero");
  if (w.size() < len)
    throw InvalidInput("frame_signal: signal of " + std::to_string(w.size()) + " samples is shorter than one frame (" +
                       std::to_string(len) + ")");
  const std::size_t t = frame_count(w.size(), len, hop);
  std::vector<std::span<const double>> frames;
  frames.reserve(t);
  for (std::size_t i = 0; i < t; ++i) frames.emplace_back(w.samples.data() + i * hop, len);
  return frames;
}

// Symmetric Hamming window: 0.54 - 0.46 cos(2 pi n / (L - 1)).
inline std::vector<double> hamming_window(std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (len < 2) return w;
  for (std::size_t n = 0; n < len; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(len - 1));
  return w;
}

// ---- mel scale -----------------------------------------------------------------

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Center frequencies of n_mels triangles plus the two outer edges, equally
// spaced in mel between 0 Hz and sample_rate / 2.
inline std::vector<double> mel_edges_hz(std::size_t n_mels, double sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  return edges;
}

// n_mels x (fft_size/2 + 1) matrix of unit-peak triangular filters.
inline Matrix mel_filterbank(const FeatureConfig& cfg, double sample_rate) {
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const std::vector<double> edges = mel_edges_hz(cfg.n_mels, sample_rate);
  Matrix fb(cfg.n_mels, bins);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(cfg.fft_size);
      double v = 0.0;
      if (f > lo && f < mid)
        v = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        v = (hi - f) / (hi - mid);
      fb(m, k) = v;
    }
  }
  return fb;
}

// ---- DCT -------------------------------------------------------------------------

// Orthonormal DCT-II basis, rows = output coefficients.
inline Matrix dct_matrix(std::size_t n) {
  Matrix d(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i)
      d(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nn));
  }
  return d;
}

inline std::vector<double> dct_ii(std::span<const double> x) {
  const Matrix d = dct_matrix(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k)
    for (std::size_t i = 0; i < x.size(); ++i) out[k] += d(k, i) * x[i];
  return out;
}

// Inverse of dct_ii (orthonormal DCT-III).
inline std::vector<double> inverse_dct_ii(std::span<const double> c) {
  const Matrix d = dct_matrix(c.size());
  std::vector<double> out(c.size(), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k)
    for (std::size_t i = 0; i < c.size(); ++i) out[i] += d(k, i) * c[k];
  return out;
}

// ---- per-frame analysis ----------------------------------------------------------

// Precomputed window, FFT, filterbank and DCT for one (config, rate) pair.
// Immutable after construction; safe to share between threads.
class SpectralAnalyzer {
 public:
  SpectralAnalyzer(const FeatureConfig& cfg, double sample_rate)
      : cfg_(cfg), rate_(sample_rate), fft_((validate(cfg, sample_rate), cfg.fft_size)) {
    window_ = hamming_window(cfg.frame_length(sample_rate));
    const Matrix fb = mel_filterbank(cfg, sample_rate);
    filters_.resize(cfg.n_mels);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      auto& f = filters_[m];
      for (std::size_t k = 0; k < fb.cols(); ++k) {
        if (fb(m, k) == 0.0) continue;
        if (f.weights.empty()) f.first_bin = k;
        f.weights.resize(k - f.first_bin + 1, 0.0);
        f.weights[k - f.first_bin] = fb(m, k);
      }
    }
    const Matrix d = dct_matrix(cfg.n_mels);
    dct_rows_ = Matrix(cfg.n_mfcc, cfg.n_mels);
    for (std::size_t k = 0; k < cfg.n_mfcc; ++k)
      for (std::size_t i = 0; i < cfg.n_mels; ++i) dct_rows_(k, i) = d(k + 1, i);
  }

  const FeatureConfig& config() const { return cfg_; }
  double sample_rate() const { return rate_; }
  std::size_t frame_length() const { return window_.size(); }

  // |X[k]| of the Hamming-windowed frame, zero-padded to fft_size.
  std::vector<double> amplitude_spectrum(std::span<const double> frame) const {
    if (frame.size() != window_.size())
      throw InvalidInput("frame length " + std::to_string(frame.size()) + " does not match configured " +
                         std::to_string(window_.size()));
    std::vector<double> windowed(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) windowed[i] = frame[i] * window_[i];
    return fft_.magnitude(windowed);
  }

  std::vector<double> log_amplitude(std::span<const double> magnitude) const {
    std::vector<double> out(magnitude.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::log(magnitude[k] + kLogFloor);
    return out;
  }

  // 10 log10 of mel-filtered power.
  std::vector<double> log_mel(std::span<const double> magnitude) const {
    std::vector<double> out(filters_.size());
    for (std::size_t m = 0; m < filters_.size(); ++m) {
      const auto& f = filters_[m];
      double e = 0.0;
      for (std::size_t j = 0; j < f.weights.size(); ++j) {
        const double a = magnitude[f.first_bin + j];
        e += f.weights[j] * a * a;
      }
      out[m] = 10.0 * std::log10(e + kLogFloor);
    }
    return out;
  }

  // Cepstral coefficients 1..n_mfcc of a log-mel vector.
  std::vector<double> cepstrum(std::span<const double> log_mel) const {
    std::vector<double> out(cfg_.n_mfcc, 0.0);
    for (std::size_t k = 0; k < cfg_.n_mfcc; ++k) {
      const auto basis = dct_rows_.row(k);
      double acc = 0.0;
      for (std::size_t i = 0; i < basis.size(); ++i) acc += basis[i] * log_mel[i];
      out[k] = acc;
    }
    return out;
  }

 private:
  struct Filter {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };

  FeatureConfig cfg_;
  double rate_;
  Fft fft_;
  std::vector<double> window_;
  std::vector<Filter> filters_;
  Matrix dct_rows_;
};

inline std::vector<double> log_amplitude_spectrum(std::span<const double> frame, const FeatureConfig& cfg,
                                                  double sample_rate) {
  const SpectralAnalyzer a(cfg, sample_rate);
  return a.log_amplitude(a.amplitude_spectrum(frame));
}

inline std::vector<double> log_mel_spectrogram(std::span<const double> frame, const FeatureConfig& cfg,
                                               double sample_rate) {
  const SpectralAnalyzer a(cfg, sample_rate);
  return a.log_mel(a.amplitude_spectrum(frame));
}

inline std::vector<double> mfcc(std::span<const double> frame, const FeatureConfig& cfg, double sample_rate) {
  const SpectralAnalyzer a(cfg, sample_rate);
  return a.cepstrum(a.log_mel(a.amplitude_spectrum(frame)));
}

// ---- deltas ----------------------------------------------------------------------

// Regression deltas over a (2N+1)-frame window with edge replication:
// d_t = sum_{n=1..N} n (c_{t+n} - c_{t-n}) / (2 sum n^2).
inline Matrix delta(const Matrix& c, std::size_t window = 9) {
  const std::size_t t_len = c.rows();
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  double denom = 0.0;
  for (std::ptrdiff_t n = 1; n <= half; ++n) denom += static_cast<double>(n * n);
  denom *= 2.0;
  Matrix d(t_len, c.cols());
  const auto last = static_cast<std::ptrdiff_t>(t_len) - 1;
  for (std::ptrdiff_t t = 0; t <= last; ++t) {
    for (std::ptrdiff_t n = 1; n <= half; ++n) {
      const auto fwd = static_cast<std::size_t>(std::min(t + n, last));
      const auto back = static_cast<std::size_t>(std::max<std::ptrdiff_t>(t - n, 0));
      for (std::size_t j = 0; j < c.cols(); ++j)
        d(static_cast<std::size_t>(t), j) += static_cast<double>(n) * (c(fwd, j) - c(back, j));
    }
    for (std::size_t j = 0; j < c.cols(); ++j) d(static_cast<std::size_t>(t), j) /= denom;
  }
  return d;
}

// [static, delta, delta-delta], T x 3D.
inline Matrix append_deltas(const Matrix& c, std::size_t window = 9) {
  if (c.rows() == 0) throw InvalidInput("append_deltas: no frames");
  const Matrix d1 = delta(c, window);
  const Matrix d2 = delta(d1, window);
  const std::size_t dim = c.cols();
  Matrix out(c.rows(), 3 * dim);
  for (std::size_t t = 0; t < c.rows(); ++t)
    for (std::size_t j = 0; j < dim; ++j) {
      out(t, j) = c(t, j);
      out(t, dim + j) = d1(t, j);
      out(t, 2 * dim + j) = d2(t, j);
    }
  return out;
}

// ---- functionals -----------------------------------------------------------------

enum class Functional { Mean, Std, Median, Skewness, Kurtosis, Min, Max, Range };

inline constexpr std::array<Functional, kNumFunctionals> kFunctionalOrder{
    Functional::Mean,     Functional::Std, Functional::Median, Functional::Skewness,
    Functional::Kurtosis, Functional::Min, Functional::Max,    Functional::Range};

inline const char* to_string(Functional f) {
  switch (f) {
    case Functional::Mean: return "mean";
    case Functional::Std: return "std";
    case Functional::Median: return "median";
    case Functional::Skewness: return "skewness";
    case Functional::Kurtosis: return "kurtosis";
    case Functional::Min: return "min";
    case Functional::Max: return "max";
    case Functional::Range: return "range";
  }
  return "?";
}

// The eight functionals of one column, in kFunctionalOrder. Moments are
// population moments; kurtosis is excess kurtosis. A constant column gets
// zero skewness and kurtosis. `values` is reordered.
inline std::array<double, kNumFunctionals> column_functionals(std::vector<double>& values) {
  const std::size_t t = values.size();
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it, hi = *max_it;
  std::array<double, kNumFunctionals> out{};
  if (lo == hi) {
    out = {lo, 0.0, lo, 0.0, 0.0, lo, hi, 0.0};
    return out;
  }
  const double n = static_cast<double>(t);
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(t / 2);
  std::nth_element(values.begin(), mid, values.end());
  double median = *mid;
  if (t % 2 == 0) median = 0.5 * (median + *std::max_element(values.begin(), mid));

  const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  out = {mean, std::sqrt(m2), median, skew, kurt, lo, hi, hi - lo};
  return out;
}

// 8*D vector laid out functional-major: all D means, then all D stds, ...
inline SampleFeatureVector apply_functionals(const FrameMatrix& m) {
  const Matrix& x = m.frames;
  if (x.rows() == 0) throw InvalidInput("apply_functionals: no frames");
  const std::size_t d = x.cols();
  SampleFeatureVector out;
  out.kind = m.kind;
  out.values.assign(kNumFunctionals * d, 0.0);
  std::vector<double> col(x.rows());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t t = 0; t < x.rows(); ++t) col[t] = x(t, j);
    const auto f = column_functionals(col);
    for (std::size_t k = 0; k < kNumFunctionals; ++k) out.values[k * d + j] = f[k];
  }
  return out;
}

// ---- end-to-end ------------------------------------------------------------------

struct FrameFeatures {
  FrameMatrix spectrogram;
  FrameMatrix mel_spectrogram;
  FrameMatrix mfcc;

  const FrameMatrix& get(FeatureKind k) const {
    switch (k) {
      case FeatureKind::Spectrogram: return spectrogram;
      case FeatureKind::MelSpectrogram: return mel_spectrogram;
      case FeatureKind::Mfcc: return mfcc;
    }
    return spectrogram;
  }
};

// All three frame-level representations from one pass of FFTs.
inline FrameFeatures frame_features(const Waveform& w, const SpectralAnalyzer& a) {
  if (w.sample_rate != a.sample_rate())
    throw InvalidInput("frame_features: waveform rate " + std::to_string(w.sample_rate) +
                       " Hz does not match analyzer rate " + std::to_string(a.sample_rate()) + " Hz");
  const FeatureConfig& cfg = a.config();
  const auto frames = frame_signal(w, cfg);
  const std::size_t t = frames.size();
  FrameFeatures ff;
  ff.spectrogram = {Matrix(t, cfg.fft_size / 2 + 1), FeatureKind::Spectrogram};
  ff.mel_spectrogram = {Matrix(t, cfg.n_mels), FeatureKind::MelSpectrogram};
  Matrix ceps(t, cfg.n_mfcc);
  for (std::size_t i = 0; i < t; ++i) {
    const auto mag = a.amplitude_spectrum(frames[i]);
    const auto spec = a.log_amplitude(mag);
    const auto mel = a.log_mel(mag);
    const auto cc = a.cepstrum(mel);
    std::copy(spec.begin(), spec.end(), ff.spectrogram.frames.row(i).begin());
    std::copy(mel.begin(), mel.end(), ff.mel_spectrogram.frames.row(i).begin());
    std::copy(cc.begin(), cc.end(), ceps.row(i).begin());
  }
  ff.mfcc = {append_deltas(ceps, cfg.delta_window), FeatureKind::Mfcc};
  return ff;
}

inline void check_dimension(const SampleFeatureVector& v, const FeatureConfig& cfg) {
  const std::size_t expected = feature_dim(v.kind, cfg);
  if (v.values.size() != expected)
    throw Error(std::string("dimension contract violated for ") + to_string(v.kind) + ": got " +
                std::to_string(v.values.size()) + ", expected " + std::to_string(expected));
  for (double x : v.values)
    if (!std::isfinite(x)) throw Error(std::string("non-finite feature value in ") + to_string(v.kind));
}

inline std::array<SampleFeatureVector, 3> extract_all(const Waveform& w, const SpectralAnalyzer& a) {
  const FrameFeatures ff = frame_features(w, a);
  std::array<SampleFeatureVector, 3> out;
  for (std::size_t i = 0; i < kAllFeatureKinds.size(); ++i) {
    out[i] = apply_functionals(ff.get(kAllFeatureKinds[i]));
    check_dimension(out[i], a.config());
  }
  return out;
}

inline SampleFeatureVector extract(const Waveform& w, FeatureKind kind, const FeatureConfig& cfg = {}) {
  const SpectralAnalyzer a(cfg, w.sample_rate);
  const FrameFeatures ff = frame_features(w, a);
  SampleFeatureVector v = apply_functionals(ff.get(kind));
  check_dimension(v, cfg);
  return v;
}

}  // namespace creak
