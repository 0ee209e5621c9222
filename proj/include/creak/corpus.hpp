#pragma once

// Labeled-recording manifests, rating binarization and class balancing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "creak/error.hpp"
#include "creak/rng.hpp"

namespace creak {

enum class CreakLabel : int { Low = 0, High = 1 };

inline const char* to_string(CreakLabel l) { return l == CreakLabel::Low ? "low" : "high"; }

inline CreakLabel label_from_string(std::string_view s) {
  if (s == "low") return CreakLabel::Low;
  if (s == "high") return CreakLabel::High;
  throw InvalidInput("unknown label: " + std::string(s));
}

struct RecordingManifestEntry {
  std::filesystem::path path;
  std::string speaker_id;
  double rating_a = 0.0;
  double rating_b = 0.0;

  bool operator==(const RecordingManifestEntry&) const = default;
};

struct LabeledSample {
  RecordingManifestEntry entry;
  double mean_rating = 0.0;
  CreakLabel label = CreakLabel::Low;
};

inline constexpr char kManifestHeader[] = "path,speaker_id,rating_a,rating_b";

// True for 0, 0.5, ..., 4.
inline bool on_likert_grid(double r) {
  if (!std::isfinite(r) || r < 0.0 || r > 4.0) return false;
  const double twice = r * 2.0;
  return std::abs(twice - std::round(twice)) < 1e-9;
}

inline void validate(const RecordingManifestEntry& e) {
  if (e.speaker_id.empty()) throw InvalidInput("manifest entry has empty speaker_id");
  if (!on_likert_grid(e.rating_a) || !on_likert_grid(e.rating_b))
    throw InvalidInput("rating off the 0..4 step 0.5 grid for speaker " + e.speaker_id);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_rating(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidInput("manifest line " + std::to_string(line_no) + ": bad rating '" + s + "'");
  }
  if (used != s.size()) throw InvalidInput("manifest line " + std::to_string(line_no) + ": bad rating '" + s + "'");
  return v;
}

}  // namespace detail

// Parses manifest CSV text. Relative paths are resolved against base_dir.
inline std::vector<RecordingManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {}) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("manifest is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (detail::trim(line) != kManifestHeader)
    throw InvalidInput(std::string("manifest header must be '") + kManifestHeader + "'");

  std::vector<RecordingManifestEntry> entries;
  std::set<std::string> speakers;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 4 || fields[0].empty())
      throw InvalidInput("manifest line " + std::to_string(line_no) + ": expected 4 fields");
    RecordingManifestEntry e;
    e.path = fields[0];
    if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    e.speaker_id = fields[1];
    e.rating_a = detail::parse_rating(fields[2], line_no);
    e.rating_b = detail::parse_rating(fields[3], line_no);
    try {
      validate(e);
    } catch (const InvalidInput& err) {
      throw InvalidInput("manifest line " + std::to_string(line_no) + ": " + err.what());
    }
    if (!speakers.insert(e.speaker_id).second)
      throw InvalidInput("manifest line " + std::to_string(line_no) + ": duplicate speaker " + e.speaker_id);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<RecordingManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  return parse_manifest(in, path.parent_path());
}

inline std::string format_rating(double r) {
  std::ostringstream ss;
  ss.precision(1);
  ss << std::fixed << r;
  return ss.str();
}

// Paths are written as given; callers pass paths relative to the manifest
// directory when the corpus should be relocatable.
inline void write_manifest(const std::filesystem::path& path, const std::vector<RecordingManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& e : entries)
    out << e.path.generic_string() << ',' << e.speaker_id << ',' << format_rating(e.rating_a) << ','
        << format_rating(e.rating_b) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// Mean rating < 2 is Low, > 2 is High, exactly 2 is excluded.
inline std::optional<LabeledSample> binarize(const RecordingManifestEntry& entry) {
  validate(entry);
  const double mean = (entry.rating_a + entry.rating_b) / 2.0;
  if (mean == 2.0) return std::nullopt;
  return LabeledSample{entry, mean, mean < 2.0 ? CreakLabel::Low : CreakLabel::High};
}

struct BinarizedCorpus {
  std::vector<LabeledSample> samples;
  std::vector<RecordingManifestEntry> excluded;
};

inline BinarizedCorpus binarize_all(const std::vector<RecordingManifestEntry>& entries) {
  BinarizedCorpus out;
  for (const auto& e : entries) {
    if (auto s = binarize(e))
      out.samples.push_back(std::move(*s));
    else
      out.excluded.push_back(e);
  }
  return out;
}

inline std::size_t count_label(const std::vector<LabeledSample>& samples, CreakLabel l) {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [l](const LabeledSample& s) { return s.label == l; }));
}

// Downsamples the majority class to the minority count. The kept samples stay
// in their input order.
inline std::vector<LabeledSample> balance_classes(const std::vector<LabeledSample>& samples, std::uint64_t seed) {
  const std::size_t n_low = count_label(samples, CreakLabel::Low);
  const std::size_t n_high = samples.size() - n_low;
  if (n_low == 0 || n_high == 0) throw InvalidInput("balance_classes: one class is empty");
  if (n_low == n_high) return samples;

  const CreakLabel majority = n_low > n_high ? CreakLabel::Low : CreakLabel::High;
  const std::size_t keep = std::min(n_low, n_high);
  std::vector<std::size_t> majority_idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].label == majority) majority_idx.push_back(i);

  // partial Fisher-Yates: the first `keep` positions are a uniform draw
  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(majority_idx.size() - i);
    std::swap(majority_idx[i], majority_idx[j]);
  }
  std::vector<bool> kept(samples.size(), false);
  for (std::size_t i = 0; i < keep; ++i) kept[majority_idx[i]] = true;

  std::vector<LabeledSample> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].label != majority || kept[i]) out.push_back(samples[i]);
  return out;
}

}  // namespace creak
