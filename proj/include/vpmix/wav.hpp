// RIFF/WAVE ingestion and emission. Reads PCM 16-bit and IEEE float 32-bit,
// mono or stereo (stereo is downmixed by channel mean); writes PCM 16-bit mono.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vpmix/audio.hpp"
#include "vpmix/errors.hpp"

namespace vpmix {

/// Header-level facts about a WAV file, readable without decoding the data.
struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  int format_code = 0;  // 1 = PCM, 3 = IEEE float
  std::size_t n_frames = 0;

  double durationS() const {
    return static_cast<double>(n_frames) / sample_rate_hz;
  }
};

namespace detail {

inline std::uint32_t readU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t readU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::vector<unsigned char> readFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(size);
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read_wav: failed reading file: " + path);
  return bytes;
}

struct WavChunks {
  WavInfo info;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
};

// Walks the RIFF chunk list and locates fmt + data. Throws FormatError naming
// the offending field on anything this library does not accept.
inline WavChunks parseWavChunks(const std::vector<unsigned char>& bytes, const std::string& path) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0) {
    throw FormatError("read_wav: missing RIFF magic in " + path);
  }
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("read_wav: RIFF form type is not WAVE in " + path);
  }

  WavChunks out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::size_t chunk_size = readU32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw FormatError("read_wav: chunk size overruns file in " + path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("read_wav: fmt chunk too short in " + path);
      const unsigned char* f = bytes.data() + body;
      out.info.format_code = readU16(f);
      out.info.channels = readU16(f + 2);
      out.info.sample_rate_hz = static_cast<int>(readU32(f + 4));
      out.info.bits_per_sample = readU16(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      out.data = bytes.data() + body;
      out.data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError("read_wav: no fmt chunk in " + path);
  if (out.data == nullptr) throw FormatError("read_wav: no data chunk in " + path);

  const WavInfo& info = out.info;
  if (info.format_code != 1 && info.format_code != 3) {
    throw FormatError("read_wav: unsupported format code " + std::to_string(info.format_code) +
                      " (want 1 = PCM or 3 = IEEE float) in " + path);
  }
  if (info.format_code == 1 && info.bits_per_sample != 16) {
    throw FormatError("read_wav: unsupported PCM bit depth " + std::to_string(info.bits_per_sample) +
                      " (want 16) in " + path);
  }
  if (info.format_code == 3 && info.bits_per_sample != 32) {
    throw FormatError("read_wav: unsupported float bit depth " + std::to_string(info.bits_per_sample) +
                      " (want 32) in " + path);
  }
  if (info.channels < 1 || info.channels > 2) {
    throw FormatError("read_wav: unsupported channel count " + std::to_string(info.channels) +
                      " (want 1 or 2) in " + path);
  }
  const int accepted[] = {16000, 22050, 44100, 48000};
  bool rate_ok = false;
  for (int r : accepted) rate_ok = rate_ok || r == info.sample_rate_hz;
  if (!rate_ok) {
    throw FormatError("read_wav: unsupported sample rate " + std::to_string(info.sample_rate_hz) +
                      " (want 16000, 22050, 44100, or 48000) in " + path);
  }

  const std::size_t frame_bytes =
      static_cast<std::size_t>(info.channels) * (info.bits_per_sample / 8);
  out.info.n_frames = out.data_size / frame_bytes;
  if (out.info.n_frames == 0) throw FormatError("read_wav: empty data chunk in " + path);
  return out;
}

}  // namespace detail

/// Reads rate/channels/length from the header without decoding samples.
inline WavInfo readWavInfo(const std::string& path) {
  const auto bytes = detail::readFileBytes(path);
  return detail::parseWavChunks(bytes, path).info;
}

/// Reads a WAV file into a mono AudioClip. 16-bit integers map to [-1, 1) by
/// dividing by 32768; stereo is downmixed by channel mean.
inline AudioClip readWav(const std::string& path) {
  const auto bytes = detail::readFileBytes(path);
  const auto chunks = detail::parseWavChunks(bytes, path);
  const WavInfo& info = chunks.info;

  AudioClip clip;
  clip.sample_rate_hz = info.sample_rate_hz;
  clip.samples.resize(info.n_frames);
  const unsigned char* p = chunks.data;
  for (std::size_t i = 0; i < info.n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < info.channels; ++c) {
      if (info.format_code == 1) {
        const auto raw = static_cast<std::int16_t>(detail::readU16(p));
        acc += static_cast<double>(raw) / 32768.0;
        p += 2;
      } else {
        float v = 0.0f;
        std::uint32_t u = detail::readU32(p);
        std::memcpy(&v, &u, 4);
        acc += static_cast<double>(v);
        p += 4;
      }
    }
    clip.samples[i] = acc / info.channels;
  }
  validateClip(clip, "read_wav");
  return clip;
}

/// Writes a PCM 16-bit mono WAV file. Every |sample| must be <= 1.0 (apply the
/// peak limit first); the top code saturates so +1.0 encodes as 32767.
inline void writeWav(const AudioClip& clip, const std::string& path) {
  validateClip(clip, "write_wav");
  for (double s : clip.samples) {
    if (std::fabs(s) > 1.0) {
      throw DomainError("write_wav: sample " + std::to_string(s) + " outside [-1, 1]");
    }
  }

  const std::size_t data_size = clip.samples.size() * 2;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_wav: cannot open file for writing: " + path);

  auto putU32 = [&out](std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff),
                                   static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
  };
  auto putU16 = [&out](std::uint16_t v) {
    const std::array<char, 2> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b.data(), 2);
  };

  out.write("RIFF", 4);
  putU32(static_cast<std::uint32_t>(36 + data_size));
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  putU32(16);
  putU16(1);  // PCM
  putU16(1);  // mono
  putU32(static_cast<std::uint32_t>(clip.sample_rate_hz));
  putU32(static_cast<std::uint32_t>(clip.sample_rate_hz * 2));
  putU16(2);   // block align
  putU16(16);  // bits per sample
  out.write("data", 4);
  putU32(static_cast<std::uint32_t>(data_size));
  for (double s : clip.samples) {
    long code = std::lround(s * 32768.0);
    code = std::min(code, 32767L);
    code = std::max(code, -32768L);
    putU16(static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
  }
  if (!out) throw IoError("write_wav: failed writing file: " + path);
}

}  // namespace vpmix
