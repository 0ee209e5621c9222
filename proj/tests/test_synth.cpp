#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>

#include "creak/synth.hpp"

using namespace creak;
namespace fs = std::filesystem;

namespace {

// Autocorrelation pitch estimate on the smoothed amplitude envelope, so that
// formant ringing inside each glottal cycle does not produce spurious peaks.
double envelope_f0(const std::vector<double>& x, double rate, double f_lo = 30.0, double f_hi = 400.0) {
  const auto smooth = static_cast<std::size_t>(0.002 * rate);
  std::vector<double> env(x.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += std::abs(x[i]);
    if (i >= smooth) acc -= std::abs(x[i - smooth]);
    env[i] = acc;
  }
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(env.size());
  for (double& v : env) v -= mean;

  const auto lag_min = static_cast<std::size_t>(rate / f_hi);
  const auto lag_max = static_cast<std::size_t>(rate / f_lo);
  std::vector<double> r(lag_max + 1, 0.0);
  for (std::size_t lag = 0; lag <= lag_max; ++lag)
    for (std::size_t i = 0; i + lag < env.size(); ++i) r[lag] += env[i] * env[i + lag];
  std::size_t start = 1;
  while (start < lag_max && r[start] > 0.0) ++start;  // skip the zero-lag lobe
  start = std::max(start, lag_min);
  const double peak = *std::max_element(r.begin() + static_cast<std::ptrdiff_t>(start), r.end());
  // First local maximum close to the global one, which avoids octave errors
  // when multiples of the period correlate equally well.
  for (std::size_t lag = start + 1; lag < lag_max; ++lag)
    if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.85 * peak) return rate / static_cast<double>(lag);
  return rate / static_cast<double>(lag_max);
}

std::vector<double> slice(const Waveform& w, std::size_t b, std::size_t e) {
  return {w.samples.begin() + static_cast<std::ptrdiff_t>(b), w.samples.begin() + static_cast<std::ptrdiff_t>(e)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Synth, CreakRegionsAreLowPitchedAndModalRegionsHigh) {
  SyntheticCorpusSpec spec;
  spec.n_per_class = 3;
  std::size_t creak_checked = 0, modal_checked = 0;
  for (std::size_t idx = 0; idx < 2 * spec.n_per_class; ++idx) {
    const SynthRecording rec = render_recording(spec, idx);
    const double rate = rec.wave.sample_rate;
    for (const auto& s : rec.segments) {
      const double len = static_cast<double>(s.end - s.begin) / rate;
      if (len < 0.35) continue;
      // Skip the 10 ms edge ramps and the transition between regions.
      const auto margin = static_cast<std::size_t>(0.03 * rate);
      const auto x = slice(rec.wave, s.begin + margin, s.end - margin);
      if (s.kind == SegmentKind::Creak) {
        const double f0 = envelope_f0(x, rate);
        EXPECT_LT(f0, 100.0) << "recording " << idx;
        EXPECT_GT(f0, 35.0) << "recording " << idx;
        ++creak_checked;
      } else if (s.kind == SegmentKind::Modal) {
        const double f0 = envelope_f0(x, rate);
        EXPECT_GT(f0, 150.0) << "recording " << idx;
        EXPECT_LT(f0, 250.0) << "recording " << idx;
        ++modal_checked;
      }
    }
  }
  EXPECT_GT(creak_checked, 5u);
  EXPECT_GT(modal_checked, 5u);
}

TEST(Synth, CreakFractionFollowsClassInterval) {
  SyntheticCorpusSpec spec;
  spec.n_per_class = 10;
  spec.duration_s = 5.0;
  for (std::size_t idx = 0; idx < 20; ++idx) {
    const auto rec = render_recording(spec, idx);
    const auto& iv = idx < 10 ? spec.creak_fraction_low : spec.creak_fraction_high;
    EXPECT_EQ(rec.label, idx < 10 ? CreakLabel::Low : CreakLabel::High);
    EXPECT_GE(rec.creak_fraction, iv.lo);
    EXPECT_LE(rec.creak_fraction, iv.hi);

    std::size_t voiced = 0, creak = 0;
    for (const auto& s : rec.segments) {
      if (s.kind != SegmentKind::Silence) voiced += s.end - s.begin;
      if (s.kind == SegmentKind::Creak) creak += s.end - s.begin;
    }
    EXPECT_NEAR(static_cast<double>(creak) / static_cast<double>(voiced), rec.creak_fraction, 0.01);
  }
}

TEST(Synth, SegmentsTileTheRecordingWithBoundedPauses) {
  SyntheticCorpusSpec spec;
  spec.n_per_class = 2;
  const auto rec = render_recording(spec, 3);
  ASSERT_FALSE(rec.segments.empty());
  EXPECT_EQ(rec.segments.front().begin, 0u);
  EXPECT_EQ(rec.segments.back().end, rec.wave.size());
  EXPECT_EQ(rec.wave.size(), static_cast<std::size_t>(spec.duration_s * spec.sample_rate));
  for (std::size_t i = 1; i < rec.segments.size(); ++i) EXPECT_EQ(rec.segments[i].begin, rec.segments[i - 1].end);
  for (std::size_t i = 0; i + 1 < rec.segments.size(); ++i) {
    const auto& s = rec.segments[i];
    if (s.kind != SegmentKind::Silence) continue;
    const double len = static_cast<double>(s.end - s.begin) / spec.sample_rate;
    EXPECT_GE(len, 0.3 - 1e-9);
    EXPECT_LE(len, 0.8 + 1e-9);
  }
  double peak = 0.0;
  for (double v : rec.wave.samples) peak = std::max(peak, std::abs(v));
  EXPECT_LT(peak, 1.0);
}

TEST(Synth, RatingsRecoverIntendedClass) {
  SyntheticCorpusSpec spec;
  for (int i = 0; i <= 100; ++i) {
    const double f = i / 100.0;
    const bool low = f <= spec.creak_fraction_low.hi, high = f >= spec.creak_fraction_high.lo;
    if (!low && !high) continue;
    const auto [a, b] = synthetic_ratings(spec, f);
    EXPECT_TRUE(on_likert_grid(a));
    EXPECT_TRUE(on_likert_grid(b));
    const auto s = binarize({"x.wav", "s", a, b});
    ASSERT_TRUE(s) << "f=" << f;
    EXPECT_EQ(s->label, low ? CreakLabel::Low : CreakLabel::High) << "f=" << f;
  }
  // Monotone in f.
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const auto [a, b] = synthetic_ratings(spec, i / 100.0);
    EXPECT_GE(a + b, prev);
    prev = a + b;
  }
}

TEST(Synth, DefaultCorpusBinarizesToFortyFivePerClass) {
  const fs::path dir = fs::temp_directory_path() / "creak_test_synth_default";
  fs::remove_all(dir);
  const SyntheticCorpusSpec spec;  // 45 per class, 16 kHz, 20 s, seed 7
  const auto corpus = generate_synthetic_corpus(spec, dir);
  EXPECT_EQ(corpus.entries.size(), 90u);
  std::size_t wavs = 0;
  for (const auto& e : fs::directory_iterator(dir)) wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 90u);

  const auto entries = load_manifest(corpus.manifest_path);
  const auto bc = binarize_all(entries);
  EXPECT_TRUE(bc.excluded.empty());
  EXPECT_EQ(count_label(bc.samples, CreakLabel::Low), 45u);
  EXPECT_EQ(count_label(bc.samples, CreakLabel::High), 45u);
  for (std::size_t i = 0; i < bc.samples.size(); ++i)
    EXPECT_EQ(bc.samples[i].label, i < 45 ? CreakLabel::Low : CreakLabel::High);

  const Waveform w = wav::read(bc.samples.front().entry.path);
  EXPECT_EQ(w.sample_rate, 16000.0);
  EXPECT_EQ(w.size(), 320000u);
  fs::remove_all(dir);
}

TEST(Synth, SameSeedIsByteIdenticalDifferentSeedDiffers) {
  const fs::path a = fs::temp_directory_path() / "creak_test_synth_a";
  const fs::path b = fs::temp_directory_path() / "creak_test_synth_b";
  const fs::path c = fs::temp_directory_path() / "creak_test_synth_c";
  for (const auto& d : {a, b, c}) fs::remove_all(d);
  SyntheticCorpusSpec spec;
  spec.n_per_class = 3;
  spec.duration_s = 3.0;
  generate_synthetic_corpus(spec, a);
  ThreadPool pool(3);
  generate_synthetic_corpus(spec, b, &pool);
  spec.seed = 8;
  generate_synthetic_corpus(spec, c);
  EXPECT_EQ(slurp(a / "manifest.csv"), slurp(b / "manifest.csv"));
  for (std::size_t i = 0; i < 6; ++i) {
    const auto name = synthetic_file_name(i);
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    EXPECT_NE(slurp(a / name), slurp(c / name)) << name;
  }
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Synth, InvalidSpecsRejected) {
  SyntheticCorpusSpec s;
  s.n_per_class = 0;
  EXPECT_THROW(validate(s), InvalidInput);
  s = {};
  s.creak_fraction_low = {0.0, 0.6};
  EXPECT_THROW(validate(s), InvalidInput);
  s = {};
  s.sample_rate = 4000;
  EXPECT_THROW(validate(s), InvalidInput);
  s = {};
  s.creak_fraction_high = {0.5, 1.2};
  EXPECT_THROW(validate(s), InvalidInput);
}

TEST(Synth, UnwritableDirectoryRejected) {
  SyntheticCorpusSpec s;
  s.n_per_class = 1;
  s.duration_s = 1.0;
  EXPECT_THROW(generate_synthetic_corpus(s, "/proc/creak_cannot_write_here"), IoError);
}
