// Loudness-controlled, musically-matched mixing of a piano excerpt with a
// violin excerpt: RMS-ratio gain law, peak cap, onset-overlap counting, the
// global-offset alignment search, and the strategy dispatcher.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vpmix/audio.hpp"
#include "vpmix/errors.hpp"
#include "vpmix/key.hpp"
#include "vpmix/midi.hpp"
#include "vpmix/rng.hpp"
#include "vpmix/spectral.hpp"

namespace vpmix {

enum class MixStrategy { kRandom, kKey, kOnset, kKeyOnset, kOriginalPair };

inline std::string strategyName(MixStrategy s) {
  switch (s) {
    case MixStrategy::kRandom: return "random";
    case MixStrategy::kKey: return "key";
    case MixStrategy::kOnset: return "onset";
    case MixStrategy::kKeyOnset: return "key_onset";
    case MixStrategy::kOriginalPair: return "original_pair";
  }
  throw DomainError("unknown strategy");
}

inline MixStrategy parseStrategy(const std::string& name) {
  if (name == "random") return MixStrategy::kRandom;
  if (name == "key") return MixStrategy::kKey;
  if (name == "onset") return MixStrategy::kOnset;
  if (name == "key_onset") return MixStrategy::kKeyOnset;
  if (name == "original_pair") return MixStrategy::kOriginalPair;
  throw DomainError("unknown strategy '" + name +
                    "' (want random, key, onset, key_onset, or original_pair)");
}

/// Piano/violin RMS ratio range; lo == hi pins the ratio (the paper's test
/// setting), lo < hi draws uniformly per mix (the training setting).
struct RmsRatioRange {
  double lo = 0.3;
  double hi = 1.2;
};

struct MixParams {
  RmsRatioRange rms_ratio;
  double piano_excerpt_s = 20.0;
  double violin_extra_s = 5.5;
  double peak_cap = 0.99;
  int onset_tolerance_frames = 0;
  int key_retry_limit = 100;
  std::uint64_t rng_seed = 0;
  double hop_s = kHopSeconds;
  OnsetPickParams onset_pick;  // used when a source has no labels
};

inline void validateMixParams(const MixParams& p) {
  if (!(p.rms_ratio.lo > 0.0) || !(p.rms_ratio.lo <= p.rms_ratio.hi)) {
    throw DomainError("mix params: need 0 < rms ratio lo <= hi");
  }
  if (!(p.peak_cap > 0.0) || p.peak_cap > 1.0) {
    throw DomainError("mix params: peak_cap must be in (0, 1]");
  }
  if (!(p.piano_excerpt_s > 0.0)) {
    throw DomainError("mix params: piano_excerpt_s must be positive");
  }
  if (p.violin_extra_s < 0.0 || p.onset_tolerance_frames < 0 || p.key_retry_limit < 1) {
    throw DomainError("mix params: negative tolerance or retry limit");
  }
}

/// Complete, replayable record of one mixture. Together with the source
/// catalog this reproduces the output sample-exactly.
struct MixRecipe {
  MixStrategy strategy = MixStrategy::kRandom;
  bool key_fallback = false;
  SourceSpan piano_span;
  SourceSpan violin_span;
  double rms_ratio = 0.0;
  double violin_gain = 0.0;
  int shift_frames = 0;
  double post_gain = 1.0;
  std::optional<KeyLabel> piano_key;
  std::optional<KeyLabel> violin_key;
  std::optional<int> overlap_count;
  std::uint64_t seed = 0;
  int mix_rate_hz = 0;
  double hop_s = kHopSeconds;
  double peak_cap = 0.99;
};

/// Gain g with rms(piano) / rms(g * violin) = ratio; the piano is never
/// rescaled at this stage because its velocities are the labels.
inline double computeViolinGain(const AudioClip& piano, const AudioClip& violin, double ratio) {
  if (ratio <= 0.0) throw DomainError("compute_violin_gain: ratio must be positive");
  const double rms_piano = rms(piano);
  const double rms_violin = rms(violin);
  if (rms_piano <= 1e-6) throw DomainError("compute_violin_gain: silent piano excerpt");
  if (rms_violin <= 1e-6) throw DomainError("compute_violin_gain: silent violin excerpt");
  return rms_piano / (ratio * rms_violin);
}

/// Uniform gain reduction keeping the peak at or below cap. Returns the
/// limited clip and the gain applied (1.0 when already under the cap).
inline std::pair<AudioClip, double> applyPeakLimit(const AudioClip& clip, double cap) {
  if (!(cap > 0.0) || cap > 1.0) throw DomainError("apply_peak_limit: cap must be in (0, 1]");
  const double p = peak(clip);
  if (p <= cap) return {clip, 1.0};
  const double post_gain = cap / p;
  AudioClip out = scale(clip, post_gain);
  // One rounding step can leave a sample a ulp over the cap; clamp it back.
  for (double& s : out.samples) s = std::clamp(s, -cap, cap);
  return {out, post_gain};
}

/// Number of piano onsets that land within tol frames of some violin onset
/// after shifting the piano grid right by shift frames. Each piano onset
/// counts at most once.
inline int countOverlap(const OnsetGrid& piano, const OnsetGrid& violin, int shift_frames,
                        int tol_frames) {
  if (std::fabs(piano.hop_s - violin.hop_s) > 1e-12) {
    throw DomainError("count_overlap: grids have different hop_s");
  }
  if (shift_frames < 0) throw DomainError("count_overlap: shift must be >= 0");
  int count = 0;
  for (int p : piano.onset_frames) {
    const int target = p + shift_frames;
    const auto it = std::lower_bound(violin.onset_frames.begin(), violin.onset_frames.end(),
                                     target - tol_frames);
    if (it != violin.onset_frames.end() && *it <= target + tol_frames) ++count;
  }
  return count;
}

/// Exhaustive scan of shift in [0, max_shift]; returns the argmax of
/// countOverlap with ties broken toward the smallest shift.
inline std::pair<int, int> bestShift(const OnsetGrid& piano, const OnsetGrid& violin,
                                     int max_shift_frames, int tol_frames) {
  if (max_shift_frames < 0) throw DomainError("best_shift: max shift must be >= 0");
  int best_shift = 0;
  int best_overlap = countOverlap(piano, violin, 0, tol_frames);
  for (int shift = 1; shift <= max_shift_frames; ++shift) {
    const int overlap = countOverlap(piano, violin, shift, tol_frames);
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best_shift = shift;
    }
  }
  return {best_shift, best_overlap};
}

/// One source excerpt entering a mix: audio at the mix rate, labels when the
/// source has them, provenance span, and an optional pre-estimated key.
struct MixInput {
  AudioClip clip;
  std::optional<NoteList> notes;
  SourceSpan span;
  std::optional<KeyLabel> key;
};

struct MixResult {
  AudioClip mixture;
  NoteList labels;
  MixRecipe recipe;
};

namespace detail {

inline OnsetGrid onsetGridFor(const MixInput& input, double hop_s,
                              const OnsetPickParams& pick) {
  const double duration = input.clip.durationS();
  const int n_frames = 1 + static_cast<int>(std::floor(duration / hop_s + 1e-9));
  if (input.notes.has_value()) {
    return notesToOnsetGrid(*input.notes, hop_s, n_frames);
  }
  const AudioClip analysis = input.clip.sample_rate_hz == kInternalRateHz
                                 ? input.clip
                                 : resample(input.clip, kInternalRateHz);
  return detectOnsets(analysis, pick);
}

}  // namespace detail

/// Mixes one piano excerpt with one violin excerpt under the given strategy:
/// (1) draw the RMS ratio, (2) scale the violin to hit it, (3) shift = 0 for
/// random/key/original-pair and the best onset alignment for onset/key_onset
/// (grids come from labels when present, else from the detector), (4) overlay
/// the piano onto the violin at the shift, (5) cap the peak, (6) shift the
/// piano labels to follow the audio. The recipe fully determines the output.
inline MixResult mixPair(const MixInput& piano, const MixInput& violin, MixStrategy strategy,
                         const MixParams& params, std::mt19937_64& rng) {
  validateMixParams(params);
  if (!piano.notes.has_value()) {
    throw DomainError("mix_pair: piano excerpt must carry note labels");
  }
  if (violin.clip.sample_rate_hz != piano.clip.sample_rate_hz) {
    throw DomainError("mix_pair: piano and violin must be at the same rate");
  }
  if (violin.clip.samples.size() < piano.clip.samples.size()) {
    throw DomainError("mix_pair: violin excerpt shorter than piano excerpt");
  }

  const double ratio = params.rms_ratio.lo < params.rms_ratio.hi
                           ? uniformRange(rng, params.rms_ratio.lo, params.rms_ratio.hi)
                           : params.rms_ratio.lo;
  const double violin_gain = computeViolinGain(piano.clip, violin.clip, ratio);
  const AudioClip violin_scaled = scale(violin.clip, violin_gain);

  MixRecipe recipe;
  recipe.strategy = strategy;
  recipe.piano_span = piano.span;
  recipe.violin_span = violin.span;
  recipe.rms_ratio = ratio;
  recipe.violin_gain = violin_gain;
  recipe.piano_key = piano.key;
  recipe.violin_key = violin.key;
  recipe.mix_rate_hz = piano.clip.sample_rate_hz;
  recipe.hop_s = params.hop_s;
  recipe.peak_cap = params.peak_cap;

  int shift = 0;
  if (strategy == MixStrategy::kOnset || strategy == MixStrategy::kKeyOnset) {
    // Largest shift keeping the piano inside the violin extent.
    const double hop_samples = params.hop_s * piano.clip.sample_rate_hz;
    const auto slack = violin.clip.samples.size() - piano.clip.samples.size();
    int geometry_cap = static_cast<int>(static_cast<double>(slack) / hop_samples);
    while (geometry_cap > 0 &&
           std::llround(geometry_cap * hop_samples) > static_cast<long long>(slack)) {
      --geometry_cap;
    }
    const int max_shift =
        std::min(static_cast<int>(std::floor(params.violin_extra_s / params.hop_s)), geometry_cap);
    const OnsetGrid piano_grid = detail::onsetGridFor(piano, params.hop_s, params.onset_pick);
    const OnsetGrid violin_grid = detail::onsetGridFor(violin, params.hop_s, params.onset_pick);
    const auto [best, overlap] =
        bestShift(piano_grid, violin_grid, max_shift, params.onset_tolerance_frames);
    shift = best;
    recipe.overlap_count = overlap;
  }
  recipe.shift_frames = shift;

  const auto offset_samples = static_cast<std::size_t>(
      std::llround(shift * params.hop_s * piano.clip.sample_rate_hz));
  const AudioClip summed = mixAt(violin_scaled, piano.clip, offset_samples);
  auto [mixture, post_gain] = applyPeakLimit(summed, params.peak_cap);
  recipe.post_gain = post_gain;

  MixResult result;
  result.mixture = std::move(mixture);
  result.labels = shiftNotes(*piano.notes, shift * params.hop_s);
  result.recipe = std::move(recipe);
  return result;
}

/// Result of the key-filtered excerpt search.
struct ViolinSelection {
  SourceSpan span;
  KeyLabel key;
  bool fallback = false;  // retry limit hit; last draw used anyway
  int attempts = 0;
};

/// Repeatedly draws violin excerpts until one's key is compatible with the
/// piano key. After key_retry_limit failed draws the last sample is used and
/// flagged. The sampler draws one random excerpt and reports its span and
/// estimated key.
template <typename SampleFn>
ViolinSelection selectViolinExcerpt(const KeyLabel& piano_key, SampleFn&& sample,
                                    const MixParams& params, std::mt19937_64& rng) {
  ViolinSelection selection;
  for (int attempt = 1; attempt <= params.key_retry_limit; ++attempt) {
    std::pair<SourceSpan, KeyLabel> draw = sample(rng);
    selection.span = std::move(draw.first);
    selection.key = draw.second;
    selection.attempts = attempt;
    if (keyCompatible(piano_key, selection.key)) {
      selection.fallback = false;
      return selection;
    }
    selection.fallback = true;
  }
  return selection;
}

}  // namespace vpmix
