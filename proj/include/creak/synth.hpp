#pragma once

// Deterministic synthetic creaky-speech corpus.
//
// Each recording alternates "sentences" and pauses. A sentence is a glottal
// pulse train shaped by a Rosenberg pulse and a 4-formant all-pole filter.
// Its final portion, a per-recording fraction f of the sentence, is creaky:
// widely spaced, irregular, attenuated pulses. Rater scores are a monotone
// function of f, so the intended class survives binarize().

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "creak/corpus.hpp"
#include "creak/error.hpp"
#include "creak/rng.hpp"
#include "creak/thread_pool.hpp"
#include "creak/wav.hpp"
#include "creak/waveform.hpp"

namespace creak {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Interval&) const = default;
};

struct SyntheticCorpusSpec {
  std::size_t n_per_class = 45;
  double sample_rate = 16000.0;
  double duration_s = 20.0;
  Interval creak_fraction_low{0.0, 0.2};
  Interval creak_fraction_high{0.5, 0.9};
  std::uint64_t seed = 7;

  bool operator==(const SyntheticCorpusSpec&) const = default;
};

inline void validate(const SyntheticCorpusSpec& s) {
  if (s.n_per_class == 0) throw InvalidInput("synthetic corpus: n_per_class must be positive");
  if (!(s.sample_rate >= 8000.0)) throw InvalidInput("synthetic corpus: sample_rate must be >= 8000 Hz");
  if (!(s.duration_s >= 1.0)) throw InvalidInput("synthetic corpus: duration must be >= 1 s");
  for (const Interval& iv : {s.creak_fraction_low, s.creak_fraction_high})
    if (!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo <= iv.hi))
      throw InvalidInput("synthetic corpus: creak fraction interval must lie within [0, 1]");
  if (!(s.creak_fraction_low.hi < s.creak_fraction_high.lo))
    throw InvalidInput("synthetic corpus: low and high creak intervals must be disjoint with low < high");
}

enum class SegmentKind { Silence, Modal, Creak };

// Sample range [begin, end) of one region of a synthetic recording.
struct Segment {
  SegmentKind kind;
  std::size_t begin;
  std::size_t end;
};

struct SynthRecording {
  Waveform wave;
  std::vector<Segment> segments;
  double creak_fraction = 0.0;
  CreakLabel label = CreakLabel::Low;
  double rating_a = 0.0;
  double rating_b = 0.0;
};

namespace synth {

inline constexpr std::array<double, 4> kFormantHz{500.0, 1500.0, 2500.0, 3500.0};
inline constexpr std::array<double, 4> kBandwidthHz{80.0, 120.0, 160.0, 200.0};

inline constexpr double kSentenceMinS = 1.5;
inline constexpr double kSentenceMaxS = 3.0;
inline constexpr double kPauseMinS = 0.3;
inline constexpr double kPauseMaxS = 0.8;
inline constexpr double kModalF0Min = 180.0;
inline constexpr double kModalF0Max = 220.0;
inline constexpr double kModalJitter = 0.02;
inline constexpr double kCreakF0Min = 40.0;
inline constexpr double kCreakF0Max = 70.0;
inline constexpr double kCreakJitter = 0.20;
inline constexpr double kCreakAmplitude = 0.7;
inline constexpr double kPeakLevel = 0.9;
inline constexpr double kNoiseLevel = 3e-4;

// Rosenberg glottal flow derivative for one cycle starting at `start`.
// The open phase is capped at max_open samples, so slow creaky cycles get a
// long closed phase instead of a smeared pulse.
inline void add_rosenberg_pulse(std::vector<double>& exc, double start, double period, double max_open,
                                double amplitude) {
  const double open = std::min(0.56 * period, max_open);
  const double rise = open * (0.40 / 0.56);
  const double fall = open - rise;
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(start)));
  const auto last = std::min(exc.size(), static_cast<std::size_t>(std::ceil(start + open)));
  for (std::size_t n = first; n < last; ++n) {
    const double t = static_cast<double>(n) - start;
    double d;
    if (t < rise)
      d = (std::numbers::pi / (2.0 * rise)) * std::sin(std::numbers::pi * t / rise);
    else
      d = -(std::numbers::pi / (2.0 * fall)) * std::sin(std::numbers::pi * (t - rise) / (2.0 * fall));
    exc[n] += amplitude * d;
  }
}

// Cascade of second-order resonators, unit gain at DC.
inline void formant_filter(std::vector<double>& x, double sample_rate) {
  for (std::size_t k = 0; k < kFormantHz.size(); ++k) {
    const double r = std::exp(-std::numbers::pi * kBandwidthHz[k] / sample_rate);
    const double theta = 2.0 * std::numbers::pi * kFormantHz[k] / sample_rate;
    const double a1 = 2.0 * r * std::cos(theta);
    const double a2 = -r * r;
    const double gain = 1.0 - a1 - a2;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
      const double y = gain * v + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
}

// Renders one sentence of n samples, the last round(f*n) of them creaky.
inline void render_sentence(Rng& rng, std::size_t n, double creak_fraction, double rate, std::vector<double>& out,
                            std::size_t offset, std::vector<Segment>& segments) {
  const auto n_creak = static_cast<std::size_t>(std::llround(creak_fraction * static_cast<double>(n)));
  const std::size_t n_modal = n - n_creak;
  const double max_open = rate / 150.0;

  std::vector<double> exc(n, 0.0);
  const double modal_f0 = rng.uniform(kModalF0Min + 5.0, kModalF0Max - 5.0);
  double t = 0.0;
  while (t < static_cast<double>(n)) {
    double period;
    double amp;
    if (t < static_cast<double>(n_modal)) {
      period = rate / modal_f0 * (1.0 + rng.uniform(-kModalJitter, kModalJitter));
      amp = 1.0 + rng.uniform(-0.05, 0.05);
    } else {
      period = rate / rng.uniform(kCreakF0Min, kCreakF0Max) * (1.0 + rng.uniform(-kCreakJitter, kCreakJitter));
      amp = kCreakAmplitude;
    }
    add_rosenberg_pulse(exc, t, period, max_open, amp);
    t += period;
  }
  formant_filter(exc, rate);

  // 10 ms raised-cosine ramps at both ends
  const auto ramp = std::min(n / 2, static_cast<std::size_t>(0.01 * rate));
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
    exc[i] *= g;
    exc[n - 1 - i] *= g;
  }
  std::copy(exc.begin(), exc.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
  if (n_modal > 0) segments.push_back({SegmentKind::Modal, offset, offset + n_modal});
  if (n_creak > 0) segments.push_back({SegmentKind::Creak, offset + n_modal, offset + n});
}

inline double snap_to_grid(double r) { return std::clamp(std::round(2.0 * r) / 2.0, 0.0, 4.0); }

}  // namespace synth

// Monotone map from creak fraction to the two raters' Likert scores. The
// midpoint between the class intervals maps to 2; scores are then kept on
// their class's side of 2 so the mean never lands on the excluded boundary.
inline std::pair<double, double> synthetic_ratings(const SyntheticCorpusSpec& spec, double f) {
  const double c = 0.5 * (spec.creak_fraction_low.hi + spec.creak_fraction_high.lo);
  const double r = f <= c ? 2.0 * f / c : 2.0 + 2.0 * (f - c) / (1.0 - c);
  double a = synth::snap_to_grid(r + 0.2);
  double b = synth::snap_to_grid(r - 0.2);
  if (f <= spec.creak_fraction_low.hi) {
    a = std::min(a, 1.5);
    b = std::min(b, 1.5);
  } else {
    a = std::max(a, 2.5);
    b = std::max(b, 2.5);
  }
  return {a, b};
}

// Recording `index` of the corpus; indices [0, n) are Low, [n, 2n) High.
inline SynthRecording render_recording(const SyntheticCorpusSpec& spec, std::size_t index) {
  validate(spec);
  using namespace synth;
  SynthRecording rec;
  rec.label = index < spec.n_per_class ? CreakLabel::Low : CreakLabel::High;
  Rng rng(derive_seed(spec.seed, index));
  const Interval& iv = rec.label == CreakLabel::Low ? spec.creak_fraction_low : spec.creak_fraction_high;
  rec.creak_fraction = rng.uniform(iv.lo, iv.hi);
  std::tie(rec.rating_a, rec.rating_b) = synthetic_ratings(spec, rec.creak_fraction);

  const double rate = spec.sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
  rec.wave.sample_rate = rate;
  rec.wave.samples.assign(total, 0.0);

  const auto min_sentence = static_cast<std::size_t>(0.5 * rate);
  std::size_t pos = 0;
  while (pos < total) {
    auto len = static_cast<std::size_t>(rng.uniform(kSentenceMinS, kSentenceMaxS) * rate);
    len = std::min(len, total - pos);
    if (len < min_sentence) {
      rec.segments.push_back({SegmentKind::Silence, pos, total});
      break;
    }
    render_sentence(rng, len, rec.creak_fraction, rate, rec.wave.samples, pos, rec.segments);
    pos += len;
    if (pos >= total) break;
    auto gap = static_cast<std::size_t>(rng.uniform(kPauseMinS, kPauseMaxS) * rate);
    gap = std::min(gap, total - pos);
    rec.segments.push_back({SegmentKind::Silence, pos, pos + gap});
    pos += gap;
  }

  double peak = 0.0;
  for (double v : rec.wave.samples) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? kPeakLevel / peak : 1.0;
  for (double& v : rec.wave.samples) v = v * gain + kNoiseLevel * rng.normal();
  return rec;
}

struct SyntheticCorpus {
  std::filesystem::path manifest_path;
  std::vector<RecordingManifestEntry> entries;  // paths relative to the manifest directory
};

inline std::string synthetic_file_name(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "rec_" + digits + ".wav";
}

inline std::string synthetic_speaker_id(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "spk" + digits;
}

// Writes 2*n_per_class WAV files and manifest.csv into out_dir.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& out_dir,
                                                 ThreadPool* pool = nullptr) {
  validate(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create output directory: " + out_dir.string());

  const std::size_t n = 2 * spec.n_per_class;
  SyntheticCorpus corpus;
  corpus.entries.resize(n);
  parallel_for(pool, n, [&](std::size_t i) {
    const SynthRecording rec = render_recording(spec, i);
    const std::string name = synthetic_file_name(i);
    wav::write(out_dir / name, rec.wave);
    corpus.entries[i] = RecordingManifestEntry{name, synthetic_speaker_id(i), rec.rating_a, rec.rating_b};
  });
  corpus.manifest_path = out_dir / "manifest.csv";
  write_manifest(corpus.manifest_path, corpus.entries);
  return corpus;
}

}  // namespace creak
