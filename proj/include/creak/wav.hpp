#pragma once

// RIFF/WAVE reader and writer for 16-bit PCM mono files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "creak/error.hpp"
#include "creak/waveform.hpp"

namespace creak::wav {

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

// Quantizes to 16-bit with rounding and clipping.
inline std::int16_t to_pcm16(double x) {
  const double scaled = std::round(std::clamp(x, -1.0, 1.0) * 32767.0);
  return static_cast<std::int16_t>(scaled);
}

inline std::string encode(const Waveform& w) {
  if (w.sample_rate <= 0 || w.sample_rate > 4294967295.0) throw InvalidInput("wav: invalid sample rate");
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);  // PCM
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, rate);
  detail::put_u32(out, rate * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (double x : w.samples) detail::put_u16(out, static_cast<std::uint16_t>(to_pcm16(x)));
  return out;
}

inline Waveform decode(const std::string& bytes, const std::string& name = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw IoError("wav: not a RIFF/WAVE file: " + name);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = detail::read_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > n && std::memcmp(p + pos, "data", 4) != 0)
      throw IoError("wav: truncated chunk in " + name);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("wav: short fmt chunk in " + name);
      format = detail::read_u16(p + body);
      channels = detail::read_u16(p + body + 2);
      rate = detail::read_u32(p + body + 4);
      bits = detail::read_u16(p + body + 14);
      if (format == 0xFFFE && size >= 26) format = detail::read_u16(p + body + 24);  // extensible
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw IoError("wav: data chunk before fmt chunk in " + name);
      if (format != 1 || bits != 16) throw IoError("wav: only 16-bit PCM is supported: " + name);
      if (channels != 1) throw IoError("wav: expected mono audio: " + name);
      const std::size_t avail = std::min<std::size_t>(size, n - body);
      Waveform w;
      w.sample_rate = rate;
      w.samples.resize(avail / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(detail::read_u16(p + body + 2 * i));
        w.samples[i] = v / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw IoError("wav: no data chunk in " + name);
}

inline Waveform read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes, path.string());
}

inline void write(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write wav file: " + path.string());
  const std::string bytes = encode(w);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace creak::wav
