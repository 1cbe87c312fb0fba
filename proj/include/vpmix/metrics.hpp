// Frame- and note-based transcription metrics over (reference, estimated)
// note-list pairs: the four families Frame, Note with onset, Note with offset,
// and Note with offset & velocity, each as precision/recall/F1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "vpmix/errors.hpp"
#include "vpmix/matching.hpp"
#include "vpmix/midi.hpp"

namespace vpmix {

/// Matching tolerances. Defaults follow the reference transcription-metric
/// tool's documented conventions: 50 ms onsets, offsets within
/// max(50 ms, 20% of reference duration), velocity within 0.1 after affine
/// calibration.
struct MatchConfig {
  double onset_tol_s = 0.05;
  double offset_min_tol_s = 0.05;
  double offset_ratio = 0.2;
  double velocity_tol = 0.1;
  double frame_hop_s = kHopSeconds;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PRF makePrf(double precision, double recall) {
  PRF prf;
  prf.precision = precision;
  prf.recall = recall;
  prf.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return prf;
}

/// The four metric families. note_onset.f1 >= note_offset.f1 >=
/// note_offset_velocity.f1 always holds: each stricter criterion admits a
/// subset of the candidate pairs.
struct MetricReport {
  PRF frame;
  PRF note_onset;
  PRF note_offset;
  PRF note_offset_velocity;
};

enum class MatchCriteria { kOnset, kOnsetOffset, kOnsetOffsetVelocity };

namespace detail {

inline bool onsetValid(const NoteEvent& ref, const NoteEvent& est, const MatchConfig& cfg) {
  return ref.pitch == est.pitch && std::fabs(ref.onset_s - est.onset_s) <= cfg.onset_tol_s;
}

inline bool offsetValid(const NoteEvent& ref, const NoteEvent& est, const MatchConfig& cfg) {
  const double tol = std::max(cfg.offset_min_tol_s, cfg.offset_ratio * (ref.offset_s - ref.onset_s));
  return std::fabs(ref.offset_s - est.offset_s) <= tol;
}

/// Least-squares affine map est -> target. Falls back to a constant map when
/// the estimated velocities carry no spread.
struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
};

inline AffineFit fitAffine(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  AffineFit fit;
  if (std::fabs(denom) < 1e-12) {
    fit.slope = 0.0;
    fit.intercept = n > 0.0 ? sy / n : 0.0;
  } else {
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
  }
  return fit;
}

}  // namespace detail

/// Valid (ref, est) pairs under the requested criteria, resolved to a
/// maximum-cardinality matching so each note is used at most once.
///
/// Velocity calibration: over the onset+offset-valid candidate pairs,
/// reference velocities are min-max normalized to [0, 1] and a global
/// least-squares affine map is fit from estimated velocities to the normalized
/// references; a pair is velocity-valid iff its mapped error is within
/// velocity_tol.
inline std::vector<std::pair<int, int>> matchNotes(const NoteList& ref, const NoteList& est,
                                                   const MatchConfig& cfg, MatchCriteria criteria) {
  const int n_ref = static_cast<int>(ref.notes.size());
  const int n_est = static_cast<int>(est.notes.size());
  if (n_ref == 0 || n_est == 0) return {};

  struct Candidate {
    int r;
    int e;
    double onset_dist;
  };
  std::vector<Candidate> candidates;
  for (int r = 0; r < n_ref; ++r) {
    for (int e = 0; e < n_est; ++e) {
      if (!detail::onsetValid(ref.notes[r], est.notes[e], cfg)) continue;
      if (criteria != MatchCriteria::kOnset &&
          !detail::offsetValid(ref.notes[r], est.notes[e], cfg)) {
        continue;
      }
      candidates.push_back({r, e, std::fabs(ref.notes[r].onset_s - est.notes[e].onset_s)});
    }
  }

  if (criteria == MatchCriteria::kOnsetOffsetVelocity && !candidates.empty()) {
    double v_min = 127.0, v_max = 1.0;
    for (const Candidate& c : candidates) {
      v_min = std::min(v_min, static_cast<double>(ref.notes[c.r].velocity));
      v_max = std::max(v_max, static_cast<double>(ref.notes[c.r].velocity));
    }
    auto normalizeRef = [v_min, v_max](double v) {
      return v_max > v_min ? (v - v_min) / (v_max - v_min) : 0.0;
    };
    std::vector<double> est_v, ref_norm;
    est_v.reserve(candidates.size());
    ref_norm.reserve(candidates.size());
    for (const Candidate& c : candidates) {
      est_v.push_back(static_cast<double>(est.notes[c.e].velocity));
      ref_norm.push_back(normalizeRef(static_cast<double>(ref.notes[c.r].velocity)));
    }
    const detail::AffineFit fit = detail::fitAffine(est_v, ref_norm);
    std::vector<Candidate> kept;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (std::fabs(fit(est_v[i]) - ref_norm[i]) <= cfg.velocity_tol) {
        kept.push_back(candidates[i]);
      }
    }
    candidates.swap(kept);
  }

  // Deterministic edge order: closest onsets first.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.onset_dist != b.onset_dist) return a.onset_dist < b.onset_dist;
    if (a.r != b.r) return a.r < b.r;
    return a.e < b.e;
  });
  std::vector<std::vector<int>> adj(n_ref);
  for (const Candidate& c : candidates) adj[c.r].push_back(c.e);
  return maxBipartiteMatching(n_ref, n_est, std::move(adj));
}

/// P = |M|/|est|, R = |M|/|ref| with the empty-side-is-zero convention.
inline PRF notePrf(const NoteList& ref, const NoteList& est,
                   const std::vector<std::pair<int, int>>& matching) {
  const double m = static_cast<double>(matching.size());
  const double p = est.notes.empty() ? 0.0 : m / static_cast<double>(est.notes.size());
  const double r = ref.notes.empty() ? 0.0 : m / static_cast<double>(ref.notes.size());
  return makePrf(p, r);
}

/// Cellwise TP/FP/FN over two rolls; the shorter roll is zero-padded.
inline PRF framePrf(const PianoRoll& ref, const PianoRoll& est) {
  if (std::fabs(ref.hop_s - est.hop_s) > 1e-12) {
    throw DomainError("frame_prf: hop mismatch");
  }
  const int n = std::max(ref.n_frames, est.n_frames);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int f = 0; f < n; ++f) {
    for (int p = kPianoLowPitch; p <= kPianoHighPitch; ++p) {
      const bool a = f < ref.n_frames && ref.at(f, p);
      const bool b = f < est.n_frames && est.at(f, p);
      tp += static_cast<std::size_t>(a && b);
      fp += static_cast<std::size_t>(!a && b);
      fn += static_cast<std::size_t>(a && !b);
    }
  }
  const double prec = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double rec = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return makePrf(prec, rec);
}

/// Raw counts behind a MetricReport, so batch evaluation can pool over pieces.
struct EvalCounts {
  std::size_t n_ref = 0;
  std::size_t n_est = 0;
  std::size_t matched_onset = 0;
  std::size_t matched_offset = 0;
  std::size_t matched_velocity = 0;
  std::size_t frame_tp = 0;
  std::size_t frame_fp = 0;
  std::size_t frame_fn = 0;
};

inline int rollFrameCount(const NoteList& notes, double hop_s) {
  double max_off = 0.0;
  for (const NoteEvent& n : notes.notes) max_off = std::max(max_off, n.offset_s);
  return 1 + static_cast<int>(std::floor((max_off + 1e-9) / hop_s));
}

inline EvalCounts evaluateCounts(const NoteList& ref, const NoteList& est, const MatchConfig& cfg) {
  EvalCounts counts;
  counts.n_ref = ref.notes.size();
  counts.n_est = est.notes.size();
  counts.matched_onset = matchNotes(ref, est, cfg, MatchCriteria::kOnset).size();
  counts.matched_offset = matchNotes(ref, est, cfg, MatchCriteria::kOnsetOffset).size();
  counts.matched_velocity = matchNotes(ref, est, cfg, MatchCriteria::kOnsetOffsetVelocity).size();

  const int n_frames = std::max(rollFrameCount(ref, cfg.frame_hop_s),
                                rollFrameCount(est, cfg.frame_hop_s));
  const PianoRoll ref_roll = notesToPianoRoll(ref, cfg.frame_hop_s, n_frames);
  const PianoRoll est_roll = notesToPianoRoll(est, cfg.frame_hop_s, n_frames);
  for (int f = 0; f < n_frames; ++f) {
    for (int p = kPianoLowPitch; p <= kPianoHighPitch; ++p) {
      const bool a = ref_roll.at(f, p);
      const bool b = est_roll.at(f, p);
      counts.frame_tp += static_cast<std::size_t>(a && b);
      counts.frame_fp += static_cast<std::size_t>(!a && b);
      counts.frame_fn += static_cast<std::size_t>(a && !b);
    }
  }
  return counts;
}

inline MetricReport reportFromCounts(const EvalCounts& c) {
  auto note_prf = [&c](std::size_t matched) {
    const double m = static_cast<double>(matched);
    const double p = c.n_est > 0 ? m / static_cast<double>(c.n_est) : 0.0;
    const double r = c.n_ref > 0 ? m / static_cast<double>(c.n_ref) : 0.0;
    return makePrf(p, r);
  };
  MetricReport report;
  const double tp = static_cast<double>(c.frame_tp);
  report.frame = makePrf(c.frame_tp + c.frame_fp > 0 ? tp / (c.frame_tp + c.frame_fp) : 0.0,
                         c.frame_tp + c.frame_fn > 0 ? tp / (c.frame_tp + c.frame_fn) : 0.0);
  report.note_onset = note_prf(c.matched_onset);
  report.note_offset = note_prf(c.matched_offset);
  report.note_offset_velocity = note_prf(c.matched_velocity);
  return report;
}

/// All four metric families for one (reference, estimated) pair.
inline MetricReport evaluate(const NoteList& ref, const NoteList& est, const MatchConfig& cfg = {}) {
  return reportFromCounts(evaluateCounts(ref, est, cfg));
}

}  // namespace vpmix
