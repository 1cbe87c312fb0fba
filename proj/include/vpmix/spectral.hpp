// Audio-derived features: STFT magnitudes, spectral-flux onset detection, and
// octave-folded chroma. Everything here runs at the 16 kHz analysis rate with
// a 2048-sample Hann window hopping by 512 samples (32 ms).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "vpmix/audio.hpp"
#include "vpmix/errors.hpp"
#include "vpmix/fft.hpp"
#include "vpmix/midi.hpp"

namespace vpmix {

constexpr int kStftWindow = 2048;
constexpr int kStftHop = 512;

/// Short-time magnitude spectrum: n_frames x (window/2 + 1) non-negative reals.
struct Spectrogram {
  double hop_s = kHopSeconds;
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<double> magnitudes;  // row-major frames x bins
  std::vector<double> bin_freqs_hz;

  double at(std::size_t frame, std::size_t bin) const {
    return magnitudes[frame * n_bins + bin];
  }
};

/// 12 non-negative weights indexed by pitch class 0 = C ... 11 = B, with unit
/// L1 sum.
struct ChromaVector {
  std::array<double, 12> weights{};
};

/// Hann-windowed STFT magnitudes (window 2048, hop 512, no padding):
/// frame count = 1 + floor((len - 2048) / 512). The clip must already be at
/// the 16 kHz analysis rate and at least one window long.
inline Spectrogram stftMagnitude(const AudioClip& clip) {
  validateClip(clip, "stft_magnitude");
  if (clip.sample_rate_hz != kInternalRateHz) {
    throw DomainError("stft_magnitude: clip must be at the " + std::to_string(kInternalRateHz) +
                      " Hz analysis rate, got " + std::to_string(clip.sample_rate_hz));
  }
  if (clip.samples.size() < kStftWindow) {
    throw DomainError("stft_magnitude: clip shorter than one window (" +
                      std::to_string(clip.samples.size()) + " < " + std::to_string(kStftWindow) + ")");
  }

  static const std::vector<double> window = [] {
    std::vector<double> w(kStftWindow);
    for (int n = 0; n < kStftWindow; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / kStftWindow);
    }
    return w;
  }();

  Spectrogram spec;
  spec.hop_s = static_cast<double>(kStftHop) / clip.sample_rate_hz;
  spec.n_frames = 1 + (clip.samples.size() - kStftWindow) / kStftHop;
  spec.n_bins = kStftWindow / 2 + 1;
  spec.magnitudes.resize(spec.n_frames * spec.n_bins);
  spec.bin_freqs_hz.resize(spec.n_bins);
  for (std::size_t k = 0; k < spec.n_bins; ++k) {
    spec.bin_freqs_hz[k] = static_cast<double>(k) * clip.sample_rate_hz / kStftWindow;
  }

  std::vector<std::complex<double>> buf(kStftWindow);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    const double* x = clip.samples.data() + f * kStftHop;
    for (int n = 0; n < kStftWindow; ++n) buf[n] = {x[n] * window[n], 0.0};
    detail::fftInPlace(buf);
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      spec.magnitudes[f * spec.n_bins + k] = std::abs(buf[k]);
    }
  }
  return spec;
}

/// Peak-picking thresholds for detectOnsets. Defaults follow the reference
/// detector's published values at the 32 ms hop; delta applies to the
/// max-normalized envelope.
struct OnsetPickParams {
  int pre_max = 1;
  int post_max = 1;
  int pre_avg = 3;
  int post_avg = 3;
  double delta = 0.07;
  int wait = 1;
};

/// Spectral-flux onset detector. The clip is symmetrically zero-padded by half
/// a window so frame f is centered at f * hop; the envelope is the
/// half-wave-rectified log-magnitude difference summed over bins. A frame is
/// an onset iff it is the maximum over the +-pre/post_max window, exceeds the
/// local mean over the +-avg window by delta, and is >= wait frames after the
/// previous onset. Silence yields an empty grid.
inline OnsetGrid detectOnsets(const AudioClip& clip, const OnsetPickParams& params = {}) {
  validateClip(clip, "detect_onsets");
  if (clip.sample_rate_hz != kInternalRateHz) {
    throw DomainError("detect_onsets: clip must be at the " + std::to_string(kInternalRateHz) +
                      " Hz analysis rate, got " + std::to_string(clip.sample_rate_hz));
  }

  AudioClip padded;
  padded.sample_rate_hz = clip.sample_rate_hz;
  padded.samples.assign(clip.samples.size() + kStftWindow, 0.0);
  std::copy(clip.samples.begin(), clip.samples.end(), padded.samples.begin() + kStftWindow / 2);
  const Spectrogram spec = stftMagnitude(padded);

  // Flux; frame 0 differences against silence so sound at t=0 still registers.
  std::vector<double> env(spec.n_frames, 0.0);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      const double cur = std::log1p(spec.at(f, k));
      const double prev = f > 0 ? std::log1p(spec.at(f - 1, k)) : 0.0;
      acc += std::max(0.0, cur - prev);
    }
    env[f] = acc;
  }

  OnsetGrid grid;
  grid.hop_s = spec.hop_s;
  grid.n_frames = static_cast<int>(spec.n_frames);

  const double env_max = *std::max_element(env.begin(), env.end());
  if (env_max <= 0.0) return grid;
  for (double& e : env) e /= env_max;

  const int n = static_cast<int>(env.size());
  const int wait = std::max(1, params.wait);
  for (int f = 0; f < n; ++f) {
    if (env[f] <= 0.0) continue;
    const int max_lo = std::max(0, f - params.pre_max);
    const int max_hi = std::min(n - 1, f + params.post_max);
    bool is_max = true;
    for (int i = max_lo; i <= max_hi; ++i) is_max = is_max && env[f] >= env[i];
    if (!is_max) continue;
    const int avg_lo = std::max(0, f - params.pre_avg);
    const int avg_hi = std::min(n - 1, f + params.post_avg);
    double mean = 0.0;
    for (int i = avg_lo; i <= avg_hi; ++i) mean += env[i];
    mean /= (avg_hi - avg_lo + 1);
    if (env[f] < mean + params.delta) continue;
    if (!grid.onset_frames.empty() && f - grid.onset_frames.back() < wait) continue;
    grid.onset_frames.push_back(f);
  }
  return grid;
}

/// Octave-folded chroma: each STFT bin's energy goes to the pitch class of its
/// nearest MIDI pitch (bins below MIDI 24 or above 108 are ignored), summed
/// over time and L1-normalized. The result is invariant to global gain.
inline ChromaVector chromagram(const AudioClip& clip) {
  validateClip(clip, "chromagram");
  if (rms(clip) <= 1e-6) {
    throw DomainError("chromagram: silent input (rms <= 1e-6), no tonal content to classify");
  }
  const Spectrogram spec = stftMagnitude(clip);

  ChromaVector chroma;
  for (std::size_t k = 1; k < spec.n_bins; ++k) {
    const double freq = spec.bin_freqs_hz[k];
    const int midi = static_cast<int>(std::lround(69.0 + 12.0 * std::log2(freq / 440.0)));
    if (midi < 24 || midi > 108) continue;
    const int pc = midi % 12;
    double energy = 0.0;
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
      const double m = spec.at(f, k);
      energy += m * m;
    }
    chroma.weights[pc] += energy;
  }

  double total = 0.0;
  for (double w : chroma.weights) total += w;
  if (total <= 0.0) {
    throw DomainError("chromagram: no energy within the MIDI 24-108 pitch range");
  }
  for (double& w : chroma.weights) w /= total;
  return chroma;
}

}  // namespace vpmix
