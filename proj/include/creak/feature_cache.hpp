#pragma once

// On-disk cache of per-recording feature vectors, keyed by
// (recording path, feature kind, configuration hash).

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "creak/error.hpp"
#include "creak/features.hpp"
#include "creak/preprocess.hpp"

namespace creak {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

// Every parameter that changes a feature value.
inline std::string config_fingerprint(const PreprocessConfig& pre, const FeatureConfig& feat) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "pre:" << pre.threshold_db << ',' << pre.min_silence_s << ',' << pre.target_rate << ";feat:"
     << feat.frame_length_ms << ',' << feat.frame_shift_ms << ',' << feat.fft_size << ',' << feat.n_mels << ','
     << feat.n_mfcc << ',' << feat.delta_window << ";v1";
  return ss.str();
}

class FeatureCache {
 public:
  static constexpr std::uint32_t kVersion = 1;

  FeatureCache(std::filesystem::path dir, const PreprocessConfig& pre, const FeatureConfig& feat)
      : dir_(std::move(dir)), config_hash_(hex64(fnv1a64(config_fingerprint(pre, feat)))) {}

  const std::filesystem::path& directory() const { return dir_; }
  const std::string& config_hash() const { return config_hash_; }

  std::filesystem::path entry_path(const std::filesystem::path& recording, FeatureKind kind) const {
    return dir_ / (hex64(fnv1a64(canonical(recording))) + "_" + to_string(kind) + "_" + config_hash_ + ".feat");
  }

  std::optional<SampleFeatureVector> load(const std::filesystem::path& recording, FeatureKind kind) const {
    std::ifstream in(entry_path(recording, kind), std::ios::binary);
    if (!in) return std::nullopt;
    char magic[4];
    std::uint32_t version = 0, kind_id = 0, key_len = 0;
    std::uint64_t dim = 0;
    in.read(magic, 4);
    read_pod(in, version);
    read_pod(in, kind_id);
    read_pod(in, key_len);
    if (!in || std::memcmp(magic, "CRKF", 4) != 0 || version != kVersion ||
        kind_id != static_cast<std::uint32_t>(kind) || key_len > 1 << 20)
      return std::nullopt;
    std::string stored(key_len, '\0');
    in.read(stored.data(), key_len);
    if (stored != key(recording)) return std::nullopt;
    read_pod(in, dim);
    if (!in || dim > (1u << 24)) return std::nullopt;
    SampleFeatureVector v;
    v.kind = kind;
    v.values.resize(dim);
    in.read(reinterpret_cast<char*>(v.values.data()), static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) return std::nullopt;
    return v;
  }

  void store(const std::filesystem::path& recording, const SampleFeatureVector& v) const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto final_path = entry_path(recording, v.kind);
    auto tmp = final_path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write feature cache entry: " + tmp.string());
      const std::string k = key(recording);
      out.write("CRKF", 4);
      write_pod(out, kVersion);
      write_pod(out, static_cast<std::uint32_t>(v.kind));
      write_pod(out, static_cast<std::uint32_t>(k.size()));
      out.write(k.data(), static_cast<std::streamsize>(k.size()));
      write_pod(out, static_cast<std::uint64_t>(v.values.size()));
      out.write(reinterpret_cast<const char*>(v.values.data()),
                static_cast<std::streamsize>(v.values.size() * sizeof(double)));
      if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) throw IoError("cannot finalize feature cache entry: " + final_path.string());
  }

 private:
  static std::string canonical(const std::filesystem::path& recording) {
    std::error_code ec;
    auto abs = std::filesystem::weakly_canonical(recording, ec);
    return (ec ? recording : abs).generic_string();
  }

  // The stored key also carries the file's size and modification time, so a
  // rewritten recording at the same path misses the cache.
  static std::string key(const std::filesystem::path& recording) {
    std::error_code ec;
    std::string k = canonical(recording);
    const auto size = std::filesystem::file_size(recording, ec);
    k += "|" + std::to_string(ec ? 0 : size);
    const auto mtime = std::filesystem::last_write_time(recording, ec);
    k += "|" + std::to_string(ec ? 0 : mtime.time_since_epoch().count());
    return k;
  }

  template <typename T>
  static void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
  }
  template <typename T>
  static void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  std::filesystem::path dir_;
  std::string config_hash_;
};

}  // namespace creak
