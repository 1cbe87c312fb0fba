// Monaural waveform type and the elementary signal arithmetic every other
// module builds on. All types are immutable values; every operation is a pure
// function of its inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vpmix/errors.hpp"

namespace vpmix {

/// Analysis rate for onset detection and chroma features. Mixing itself runs
/// at the sources' native rate (or a configured rate); see pipeline.hpp.
constexpr int kInternalRateHz = 16000;

/// Monaural sampled waveform. Samples are dimensionless amplitudes with
/// nominal range [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  double durationS() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Provenance of one excerpt: an opaque key into a source catalog plus the
/// time window taken from that source.
struct SourceSpan {
  std::string source_id;
  double start_s = 0.0;
  double duration_s = 0.0;
};

/// Throws DomainError unless the clip is non-empty, finite, and has a
/// positive sample rate.
inline void validateClip(const AudioClip& clip, const char* where) {
  if (clip.sample_rate_hz <= 0) {
    throw DomainError(std::string(where) + ": sample_rate_hz must be positive, got " +
                      std::to_string(clip.sample_rate_hz));
  }
  if (clip.samples.empty()) {
    throw DomainError(std::string(where) + ": clip has no samples");
  }
  for (double s : clip.samples) {
    if (!std::isfinite(s)) {
      throw DomainError(std::string(where) + ": clip contains a non-finite sample");
    }
  }
}

/// Root-mean-square amplitude. All-zero input returns 0.
inline double rms(const AudioClip& clip) {
  double acc = 0.0;
  for (double s : clip.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(clip.samples.size()));
}

/// Largest absolute sample value.
inline double peak(const AudioClip& clip) {
  double p = 0.0;
  for (double s : clip.samples) p = std::max(p, std::fabs(s));
  return p;
}

/// Multiplies every sample by gain.
inline AudioClip scale(const AudioClip& clip, double gain) {
  AudioClip out{clip.samples, clip.sample_rate_hz};
  for (double& s : out.samples) s *= gain;
  return out;
}

/// Slices [span.start_s, span.start_s + span.duration_s). The result has
/// llround(duration_s * rate) samples.
inline AudioClip excerpt(const AudioClip& clip, const SourceSpan& span) {
  if (span.start_s < 0.0 || span.duration_s <= 0.0) {
    throw DomainError("excerpt: span must have start_s >= 0 and duration_s > 0");
  }
  const auto start = static_cast<std::size_t>(std::llround(span.start_s * clip.sample_rate_hz));
  const auto len = static_cast<std::size_t>(std::llround(span.duration_s * clip.sample_rate_hz));
  if (len == 0 || start + len > clip.samples.size()) {
    throw DomainError("excerpt: span [" + std::to_string(span.start_s) + ", " +
                      std::to_string(span.start_s + span.duration_s) + ")s out of bounds for source of " +
                      std::to_string(clip.samples.size()) + " samples");
  }
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
  return out;
}

/// Elementwise sum with the overlay placed offset_samples into the base.
/// Output length is max(len(base), offset + len(overlay)); the shorter signal
/// is zero-padded, so a long overlay is never truncated.
inline AudioClip mixAt(const AudioClip& base, const AudioClip& overlay, std::size_t offset_samples) {
  if (base.sample_rate_hz != overlay.sample_rate_hz) {
    throw DomainError("mix_at: sample rate mismatch (" + std::to_string(base.sample_rate_hz) +
                      " vs " + std::to_string(overlay.sample_rate_hz) + ")");
  }
  AudioClip out;
  out.sample_rate_hz = base.sample_rate_hz;
  out.samples.assign(std::max(base.samples.size(), offset_samples + overlay.samples.size()), 0.0);
  std::copy(base.samples.begin(), base.samples.end(), out.samples.begin());
  for (std::size_t i = 0; i < overlay.samples.size(); ++i) {
    out.samples[offset_samples + i] += overlay.samples[i];
  }
  return out;
}

namespace detail {

inline double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Blackman window on u in [-1, 1].
inline double blackman(double u) {
  return 0.42 + 0.5 * std::cos(M_PI * u) + 0.08 * std::cos(2.0 * M_PI * u);
}

}  // namespace detail

/// Windowed-sinc resampling to target_hz. Output length is
/// round(len * target / source); identity when the rates already match.
/// Rates below 8 kHz are rejected (they would alias musical content).
inline AudioClip resample(const AudioClip& clip, int target_hz) {
  validateClip(clip, "resample");
  if (target_hz < 8000) {
    throw DomainError("resample: target_hz must be >= 8000, got " + std::to_string(target_hz));
  }
  if (target_hz == clip.sample_rate_hz) return clip;

  const double ratio = static_cast<double>(target_hz) / clip.sample_rate_hz;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * ratio));
  // Low-pass cutoff relative to the input Nyquist; 32 zero crossings per side
  // before width scaling.
  const double cutoff = std::min(1.0, ratio) * 0.97;
  const int half_width = static_cast<int>(std::ceil(32.0 / cutoff));
  const auto n_in = static_cast<std::ptrdiff_t>(clip.samples.size());

  AudioClip out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const auto j_lo = static_cast<std::ptrdiff_t>(std::ceil(center)) - half_width;
    const auto j_hi = static_cast<std::ptrdiff_t>(std::floor(center)) + half_width;
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, j_lo);
         j <= std::min(n_in - 1, j_hi); ++j) {
      const double x = center - static_cast<double>(j);
      const double w = detail::sinc(cutoff * x) * cutoff * detail::blackman(x / half_width);
      acc += w * clip.samples[static_cast<std::size_t>(j)];
      norm += w;
    }
    out.samples[i] = norm > 1e-12 ? acc / norm : 0.0;
  }
  return out;
}

}  // namespace vpmix
