#pragma once

// Experiment configuration and its JSON form.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "creak/error.hpp"
#include "creak/features.hpp"
#include "creak/ml/model_io.hpp"
#include "creak/preprocess.hpp"
#include "creak/synth.hpp"

namespace creak {

using json = nlohmann::json;

struct ExperimentConfig {
  // Exactly one corpus source.
  std::optional<std::filesystem::path> manifest;
  std::optional<SyntheticCorpusSpec> synthetic;

  std::uint64_t balance_seed = 0;
  PreprocessConfig preprocess;
  FeatureConfig features;
  std::vector<FeatureKind> feature_kinds{kAllFeatureKinds.begin(), kAllFeatureKinds.end()};
  std::vector<ml::ClassifierSpec> classifiers;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::filesystem::path output_dir = "results";
  std::optional<std::filesystem::path> cache_dir;

  bool operator==(const ExperimentConfig&) const = default;
};

inline std::vector<ml::ClassifierSpec> default_classifiers() {
  std::vector<ml::ClassifierSpec> out;
  for (auto k : ml::kAllClassifierKinds) out.push_back(ml::default_spec(k));
  return out;
}

// Synthetic 45/45 corpus, all features, all classifiers, seeds 0..9.
inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.synthetic = SyntheticCorpusSpec{};
  c.classifiers = default_classifiers();
  return c;
}

inline void to_json(json& j, const Interval& iv) { j = json::array({iv.lo, iv.hi}); }
inline void from_json(const json& j, Interval& iv) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("config: interval must be [lo, hi]");
  iv.lo = j.at(0).get<double>();
  iv.hi = j.at(1).get<double>();
}

inline void to_json(json& j, const SyntheticCorpusSpec& s) {
  j = json{{"n_per_class", s.n_per_class},
           {"sample_rate", s.sample_rate},
           {"duration_s", s.duration_s},
           {"creak_fraction_low", s.creak_fraction_low},
           {"creak_fraction_high", s.creak_fraction_high},
           {"seed", s.seed}};
}

inline void from_json(const json& j, SyntheticCorpusSpec& s) {
  s = SyntheticCorpusSpec{};
  s.n_per_class = j.value("n_per_class", s.n_per_class);
  s.sample_rate = j.value("sample_rate", s.sample_rate);
  s.duration_s = j.value("duration_s", s.duration_s);
  if (j.contains("creak_fraction_low")) s.creak_fraction_low = j.at("creak_fraction_low").get<Interval>();
  if (j.contains("creak_fraction_high")) s.creak_fraction_high = j.at("creak_fraction_high").get<Interval>();
  s.seed = j.value("seed", s.seed);
}

inline void to_json(json& j, const PreprocessConfig& p) {
  j = json{{"threshold_db", p.threshold_db}, {"min_silence_s", p.min_silence_s}, {"target_rate", p.target_rate}};
}

inline void from_json(const json& j, PreprocessConfig& p) {
  p = PreprocessConfig{};
  p.threshold_db = j.value("threshold_db", p.threshold_db);
  p.min_silence_s = j.value("min_silence_s", p.min_silence_s);
  p.target_rate = j.value("target_rate", p.target_rate);
}

inline void to_json(json& j, const FeatureConfig& f) {
  j = json{{"frame_length_ms", f.frame_length_ms}, {"frame_shift_ms", f.frame_shift_ms}, {"fft_size", f.fft_size},
           {"n_mels", f.n_mels},                   {"n_mfcc", f.n_mfcc},                 {"delta_window", f.delta_window}};
}

inline void from_json(const json& j, FeatureConfig& f) {
  f = FeatureConfig{};
  f.frame_length_ms = j.value("frame_length_ms", f.frame_length_ms);
  f.frame_shift_ms = j.value("frame_shift_ms", f.frame_shift_ms);
  f.fft_size = j.value("fft_size", f.fft_size);
  f.n_mels = j.value("n_mels", f.n_mels);
  f.n_mfcc = j.value("n_mfcc", f.n_mfcc);
  f.delta_window = j.value("delta_window", f.delta_window);
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  if (c.manifest) j["corpus"] = {{"manifest", c.manifest->generic_string()}};
  if (c.synthetic) j["corpus"] = {{"synthetic", *c.synthetic}};
  j["balance_seed"] = c.balance_seed;
  j["preprocess"] = c.preprocess;
  j["features"] = c.features;
  json kinds = json::array();
  for (auto k : c.feature_kinds) kinds.push_back(to_string(k));
  j["features"]["kinds"] = kinds;
  j["classifiers"] = c.classifiers;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir.generic_string();
  if (c.cache_dir) j["cache_dir"] = c.cache_dir->generic_string();
  return j;
}

// Fields absent from `j` keep their defaults; classifiers default to all seven.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("corpus")) {
      const json& corpus = j.at("corpus");
      if (corpus.contains("manifest") && corpus.contains("synthetic"))
        throw InvalidInput("config: corpus must name either a manifest or a synthetic spec, not both");
      if (corpus.contains("manifest")) c.manifest = corpus.at("manifest").get<std::string>();
      if (corpus.contains("synthetic")) c.synthetic = corpus.at("synthetic").get<SyntheticCorpusSpec>();
    }
    c.balance_seed = j.value("balance_seed", c.balance_seed);
    if (j.contains("preprocess")) c.preprocess = j.at("preprocess").get<PreprocessConfig>();
    if (j.contains("features")) {
      c.features = j.at("features").get<FeatureConfig>();
      if (j.at("features").contains("kinds")) {
        c.feature_kinds.clear();
        for (const auto& k : j.at("features").at("kinds")) c.feature_kinds.push_back(feature_kind_from_string(k.get<std::string>()));
      }
    }
    c.classifiers = j.contains("classifiers") ? j.at("classifiers").get<std::vector<ml::ClassifierSpec>>()
                                              : default_classifiers();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return c;
}

inline void validate(const ExperimentConfig& c) {
  if (c.manifest.has_value() == c.synthetic.has_value())
    throw InvalidInput("config: exactly one of corpus.manifest and corpus.synthetic is required");
  if (c.manifest && !std::filesystem::exists(*c.manifest))
    throw InvalidInput("config: manifest not found: " + c.manifest->string());
  if (c.synthetic) validate(*c.synthetic);
  if (c.feature_kinds.empty()) throw InvalidInput("config: no feature kinds selected");
  if (c.classifiers.empty()) throw InvalidInput("config: no classifiers selected");
  if (c.seeds.empty()) throw InvalidInput("config: seed list is empty");
  validate(c.features, c.preprocess.target_rate);
  if (!(c.preprocess.threshold_db < 0.0) || !(c.preprocess.min_silence_s > 0.0) || !(c.preprocess.target_rate > 0.0))
    throw InvalidInput("config: invalid preprocessing parameters");
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

inline void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config: " + path.string());
  out << config_to_json(c).dump(2) << '\n';
}

}  // namespace creak
