// Shared helpers for the test suites: synthetic signals, note builders, and
// scratch directories.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vpmix/audio.hpp"
#include "vpmix/midi.hpp"

namespace vpmix::testutil {

inline AudioClip sine(double freq_hz, double duration_s, int rate_hz, double amplitude = 0.5) {
  AudioClip clip;
  clip.sample_rate_hz = rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate_hz);
  }
  return clip;
}

inline AudioClip silence(double duration_s, int rate_hz) {
  AudioClip clip;
  clip.sample_rate_hz = rate_hz;
  clip.samples.assign(static_cast<std::size_t>(std::llround(duration_s * rate_hz)), 0.0);
  return clip;
}

inline AudioClip constant(double value, std::size_t n, int rate_hz) {
  AudioClip clip;
  clip.sample_rate_hz = rate_hz;
  clip.samples.assign(n, value);
  return clip;
}

inline AudioClip noise(double duration_s, int rate_hz, std::uint64_t seed, double amplitude = 0.3) {
  AudioClip clip;
  clip.sample_rate_hz = rate_hz;
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
  }
  return clip;
}

/// Unit impulses at the given times over a silent background.
inline AudioClip clickTrain(const std::vector<double>& times_s, double duration_s, int rate_hz,
                            double amplitude = 0.9) {
  AudioClip clip = silence(duration_s, rate_hz);
  for (double t : times_s) {
    const auto i = static_cast<std::size_t>(std::llround(t * rate_hz));
    if (i < clip.samples.size()) clip.samples[i] = amplitude;
  }
  return clip;
}

inline NoteEvent note(int pitch, double onset_s, double offset_s, int velocity = 80) {
  return NoteEvent{pitch, onset_s, offset_s, velocity};
}

inline NoteList noteList(std::vector<NoteEvent> notes) {
  NoteList list;
  list.notes = std::move(notes);
  sortNotes(list.notes);
  return list;
}

/// Creates (and cleans up) a unique scratch directory under the system temp.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vpmix_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace vpmix::testutil
