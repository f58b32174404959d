#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "vqcm/error.hpp"

namespace vqcm {

inline constexpr int kDefaultSampleRateHz = 8000;

/// Mono waveform with amplitudes normalized to [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRateHz;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

namespace detail {

inline std::uint16_t read_le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

inline std::int16_t to_pcm16(double x) {
  const double scaled = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// WAV (RIFF / PCM, mono)
// ---------------------------------------------------------------------------

/// Decodes an in-memory RIFF/PCM mono WAV image (8-bit unsigned or 16-bit
/// signed). Samples are divided by 128 or 32768 respectively.
inline AudioSignal parse_wav(std::span<const std::uint8_t> bytes) {
  using detail::read_le16;
  using detail::read_le32;
  if (bytes.size() < 12 || !std::equal(bytes.begin(), bytes.begin() + 4, "RIFF") ||
      !std::equal(bytes.begin() + 8, bytes.begin() + 12, "WAVE")) {
    throw Error(ErrorCode::kMalformedHeader, "missing RIFF/WAVE signature");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t chunk_size = read_le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw Error(ErrorCode::kMalformedHeader, "chunk extends past end of file");
    }
    if (std::equal(chunk, chunk + 4, "fmt ")) {
      if (chunk_size < 16) throw Error(ErrorCode::kMalformedHeader, "fmt chunk too short");
      const std::uint16_t format = read_le16(bytes.data() + body);
      channels = read_le16(bytes.data() + body + 2);
      rate = read_le32(bytes.data() + body + 4);
      bits = read_le16(bytes.data() + body + 14);
      if (format != 1) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    "WAV format tag " + std::to_string(format) + " (only PCM is supported)");
      }
      if (channels != 1) {
        throw Error(ErrorCode::kMultiChannel, std::to_string(channels) + " channels");
      }
      if (bits != 8 && bits != 16) {
        throw Error(ErrorCode::kUnsupportedEncoding, std::to_string(bits) + " bits per sample");
      }
      if (rate == 0) throw Error(ErrorCode::kMalformedHeader, "zero sample rate");
      have_fmt = true;
    } else if (std::equal(chunk, chunk + 4, "data")) {
      if (!have_fmt) throw Error(ErrorCode::kMalformedHeader, "data chunk before fmt chunk");
      AudioSignal signal;
      signal.sample_rate_hz = static_cast<int>(rate);
      const std::uint8_t* data = bytes.data() + body;
      if (bits == 8) {
        signal.samples.resize(chunk_size);
        for (std::uint32_t i = 0; i < chunk_size; ++i) {
          signal.samples[i] = (static_cast<int>(data[i]) - 128) / 128.0;
        }
      } else {
        const std::size_t n = chunk_size / 2;
        signal.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = static_cast<std::int16_t>(read_le16(data + 2 * i));
          signal.samples[i] = v / 32768.0;
        }
      }
      return signal;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  throw Error(ErrorCode::kMalformedHeader, have_fmt ? "no data chunk" : "no fmt chunk");
}

inline AudioSignal read_wav(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  try {
    return parse_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

/// Encodes as 16-bit PCM mono. Samples outside [-1, 1) are clipped.
inline std::vector<std::uint8_t> encode_wav(const AudioSignal& signal) {
  using detail::put_le16;
  using detail::put_le32;
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_le32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_le32(out, 16);
  put_le16(out, 1);  // PCM
  put_le16(out, 1);  // mono
  put_le32(out, static_cast<std::uint32_t>(signal.sample_rate_hz));
  put_le32(out, static_cast<std::uint32_t>(signal.sample_rate_hz) * 2);
  put_le16(out, 2);
  put_le16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_le32(out, data_bytes);
  for (double x : signal.samples) {
    put_le16(out, static_cast<std::uint16_t>(detail::to_pcm16(x)));
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioSignal& signal) {
  detail::write_file_bytes(path, encode_wav(signal));
}

// ---------------------------------------------------------------------------
// G.711 A-law
// ---------------------------------------------------------------------------

/// Expands one A-law code to its linear value on the 16-bit scale
/// (13-bit magnitude shifted left by 3).
constexpr int alaw_to_linear(std::uint8_t code) {
  const int a = code ^ 0x55;
  int t = (a & 0x0f) << 4;
  const int seg = (a & 0x70) >> 4;
  switch (seg) {
    case 0: t += 8; break;
    case 1: t += 0x108; break;
    default: t = (t + 0x108) << (seg - 1); break;
  }
  return (a & 0x80) ? t : -t;
}

/// Compresses one 16-bit linear sample to A-law.
constexpr std::uint8_t linear_to_alaw(int pcm16) {
  constexpr std::array<int, 8> kSegEnd = {0x1F, 0x3F, 0x7F, 0xFF, 0x1FF, 0x3FF, 0x7FF, 0xFFF};
  int value = pcm16 >> 3;
  int mask = 0xD5;
  if (value < 0) {
    mask = 0x55;
    value = -value - 1;
  }
  int seg = 0;
  while (seg < 8 && value > kSegEnd[static_cast<std::size_t>(seg)]) ++seg;
  if (seg >= 8) return static_cast<std::uint8_t>(0x7F ^ mask);
  int aval = seg << 4;
  aval |= (seg < 2) ? ((value >> 1) & 0x0F) : ((value >> seg) & 0x0F);
  return static_cast<std::uint8_t>(aval ^ mask);
}

inline AudioSignal alaw_decode(std::span<const std::uint8_t> codes) {
  AudioSignal signal;
  signal.sample_rate_hz = kDefaultSampleRateHz;
  signal.samples.reserve(codes.size());
  for (std::uint8_t c : codes) signal.samples.push_back(alaw_to_linear(c) / 32768.0);
  return signal;
}

inline std::vector<std::uint8_t> alaw_encode(const AudioSignal& signal) {
  std::vector<std::uint8_t> codes;
  codes.reserve(signal.samples.size());
  for (double x : signal.samples) codes.push_back(linear_to_alaw(detail::to_pcm16(x)));
  return codes;
}

/// Raw A-law files are headerless; the rate is always 8 kHz.
inline AudioSignal read_alaw(const std::filesystem::path& path) {
  return alaw_decode(detail::read_file_bytes(path));
}

inline void write_alaw(const std::filesystem::path& path, const AudioSignal& signal) {
  detail::write_file_bytes(path, alaw_encode(signal));
}

enum class AudioFormat { kWav, kAlaw };

inline AudioSignal read_audio(const std::filesystem::path& path, AudioFormat format) {
  return format == AudioFormat::kWav ? read_wav(path) : read_alaw(path);
}

}  // namespace vqcm
