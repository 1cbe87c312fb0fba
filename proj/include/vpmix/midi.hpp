// Standard MIDI File parsing and writing, sustain-pedal offset extension,
// note shifting, and rasterization onto fixed frame grids.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vpmix/errors.hpp"

namespace vpmix {

constexpr int kPianoLowPitch = 21;    // A0
constexpr int kPianoHighPitch = 108;  // C8
constexpr int kPianoRange = 88;

/// Frame hop matching the 512-sample hop at the 16 kHz analysis rate. This is
/// the unit the onset-alignment search shifts by.
constexpr double kHopSeconds = 0.032;

/// One note: MIDI pitch, onset/offset in seconds, note-on velocity.
struct NoteEvent {
  int pitch = 0;        // 0-127
  double onset_s = 0.0;
  double offset_s = 0.0;
  int velocity = 0;  // 1-127

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

/// Ordered sequence of notes, sorted by (onset_s, pitch).
struct NoteList {
  std::vector<NoteEvent> notes;
};

/// Quantized onset positions on a fixed frame grid.
struct OnsetGrid {
  double hop_s = kHopSeconds;
  std::vector<int> onset_frames;  // strictly increasing, all < n_frames
  int n_frames = 0;
};

/// Binary frame-by-pitch activity over the 88 piano keys (MIDI 21-108).
struct PianoRoll {
  double hop_s = kHopSeconds;
  int n_frames = 0;
  std::vector<std::uint8_t> activity;  // row-major n_frames x 88

  bool at(int frame, int pitch) const {
    return activity[static_cast<std::size_t>(frame) * kPianoRange + (pitch - kPianoLowPitch)] != 0;
  }
  void set(int frame, int pitch) {
    activity[static_cast<std::size_t>(frame) * kPianoRange + (pitch - kPianoLowPitch)] = 1;
  }
};

inline void sortNotes(std::vector<NoteEvent>& notes) {
  std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
    if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
    return a.pitch < b.pitch;
  });
}

/// Translates every onset and offset forward by delta_s. Count, pitches,
/// velocities, and durations are preserved exactly.
inline NoteList shiftNotes(const NoteList& notes, double delta_s) {
  if (delta_s < 0.0) throw DomainError("shift_notes: delta_s must be >= 0");
  NoteList out = notes;
  for (NoteEvent& n : out.notes) {
    n.onset_s += delta_s;
    n.offset_s += delta_s;
  }
  return out;
}

/// Quantizes onsets to frame = floor(onset / hop), collapsing duplicates and
/// dropping frames at or beyond n_frames. Out-of-piano-range pitches are kept;
/// an onset is an onset regardless of range.
inline OnsetGrid notesToOnsetGrid(const NoteList& notes, double hop_s, int n_frames) {
  if (hop_s <= 0.0) throw DomainError("notes_to_onset_grid: hop_s must be positive");
  OnsetGrid grid;
  grid.hop_s = hop_s;
  grid.n_frames = n_frames;
  for (const NoteEvent& n : notes.notes) {
    const int frame = static_cast<int>(std::floor((n.onset_s + 1e-9) / hop_s));
    if (frame >= 0 && frame < n_frames) grid.onset_frames.push_back(frame);
  }
  std::sort(grid.onset_frames.begin(), grid.onset_frames.end());
  grid.onset_frames.erase(std::unique(grid.onset_frames.begin(), grid.onset_frames.end()),
                          grid.onset_frames.end());
  return grid;
}

/// Rasterizes notes onto an n_frames x 88 roll: cell (f, p) is active iff the
/// frame start time f*hop lies in [onset, offset). Pitches outside the piano
/// range are dropped.
inline PianoRoll notesToPianoRoll(const NoteList& notes, double hop_s, int n_frames) {
  if (hop_s <= 0.0) throw DomainError("notes_to_piano_roll: hop_s must be positive");
  PianoRoll roll;
  roll.hop_s = hop_s;
  roll.n_frames = n_frames;
  roll.activity.assign(static_cast<std::size_t>(n_frames) * kPianoRange, 0);
  for (const NoteEvent& n : notes.notes) {
    if (n.pitch < kPianoLowPitch || n.pitch > kPianoHighPitch) continue;
    int first = static_cast<int>(std::ceil((n.onset_s - 1e-9) / hop_s));
    first = std::max(first, 0);
    for (int f = first; f < n_frames; ++f) {
      const double t = f * hop_s;
      if (t >= n.offset_s - 1e-9) break;
      roll.set(f, n.pitch);
    }
  }
  return roll;
}

namespace detail {

struct RawMidiEvent {
  std::int64_t tick = 0;
  int type = 0;     // 0 = note-off, 1 = note-on, 2 = cc64, 3 = tempo
  int channel = 0;
  int a = 0;        // pitch / controller value / unused
  int b = 0;        // velocity
  std::int64_t tempo_us = 0;
  int order = 0;    // stable tiebreak: original stream position
};

class MidiReader {
 public:
  MidiReader(const std::vector<unsigned char>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  const unsigned char* need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw FormatError("parse_midi: truncated file " + path_);
    }
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint32_t u32() {
    const unsigned char* p = need(4);
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
  }
  std::uint16_t u16() {
    const unsigned char* p = need(2);
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
  }
  unsigned char u8() { return need(1)[0]; }

  std::uint32_t varLen() {
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
      const unsigned char c = u8();
      value = (value << 7) | (c & 0x7f);
      if ((c & 0x80) == 0) return value;
    }
    throw FormatError("parse_midi: variable-length quantity longer than 4 bytes in " + path_);
  }

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

// Piecewise-constant tempo map: converts absolute ticks to seconds.
class TempoMap {
 public:
  TempoMap(std::vector<std::pair<std::int64_t, std::int64_t>> changes, int ppq) : ppq_(ppq) {
    std::sort(changes.begin(), changes.end());
    double sec = 0.0;
    std::int64_t prev_tick = 0;
    std::int64_t tempo = 500000;  // default 120 BPM
    segments_.push_back({0, 0.0, tempo});
    for (const auto& [tick, us] : changes) {
      sec += static_cast<double>(tick - prev_tick) * tempo / (1e6 * ppq_);
      prev_tick = tick;
      tempo = us;
      segments_.push_back({tick, sec, tempo});
    }
  }

  double seconds(std::int64_t tick) const {
    const Segment* seg = &segments_.front();
    for (const Segment& s : segments_) {
      if (s.tick <= tick) seg = &s;
      else break;
    }
    return seg->start_s + static_cast<double>(tick - seg->tick) * seg->tempo_us / (1e6 * ppq_);
  }

 private:
  struct Segment {
    std::int64_t tick;
    double start_s;
    std::int64_t tempo_us;
  };
  std::vector<Segment> segments_;
  int ppq_;
};

}  // namespace detail

/// Parses SMF type 0 or 1 into a NoteList. Note-on with velocity 0 closes the
/// note; a re-onset of a sounding pitch closes it at the new onset. While the
/// sustain pedal (CC64 >= 64) is held, note offsets extend to the pedal
/// release or the next re-onset of the same pitch, whichever is earlier.
/// Dangling note-ons are closed at end of track with a warning.
inline NoteList parseMidi(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("parse_midi: cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto warn = [warnings](const std::string& msg) {
    if (warnings != nullptr) warnings->push_back(msg);
  };

  detail::MidiReader r(bytes, path);
  if (std::memcmp(r.need(4), "MThd", 4) != 0) {
    throw FormatError("parse_midi: missing MThd header in " + path);
  }
  if (r.u32() != 6) throw FormatError("parse_midi: MThd length is not 6 in " + path);
  const int format = r.u16();
  const int n_tracks = r.u16();
  const int division = static_cast<std::int16_t>(r.u16());
  if (format != 0 && format != 1) {
    throw FormatError("parse_midi: unsupported SMF format " + std::to_string(format) +
                      " (want 0 or 1) in " + path);
  }
  if (division <= 0) {
    throw FormatError("parse_midi: SMPTE time division unsupported in " + path);
  }

  std::vector<detail::RawMidiEvent> events;
  std::vector<std::pair<std::int64_t, std::int64_t>> tempo_changes;
  std::int64_t max_tick = 0;
  int order = 0;

  for (int t = 0; t < n_tracks; ++t) {
    if (std::memcmp(r.need(4), "MTrk", 4) != 0) {
      throw FormatError("parse_midi: missing MTrk chunk in " + path);
    }
    const std::uint32_t track_len = r.u32();
    const std::size_t track_end = r.pos() + track_len;
    std::int64_t tick = 0;
    int running_status = 0;
    while (r.pos() < track_end) {
      tick += r.varLen();
      max_tick = std::max(max_tick, tick);
      int status = r.u8();
      if (status < 0x80) {
        if (running_status == 0) {
          throw FormatError("parse_midi: data byte without running status in " + path);
        }
        r.seek(r.pos() - 1);
        status = running_status;
      }
      if (status == 0xff) {  // meta
        const int type = r.u8();
        const std::uint32_t len = r.varLen();
        const unsigned char* data = r.need(len);
        if (type == 0x51 && len == 3) {
          tempo_changes.emplace_back(tick, (static_cast<std::int64_t>(data[0]) << 16) |
                                               (data[1] << 8) | data[2]);
        }
        if (type == 0x2f) {  // end of track
          r.seek(track_end);
          break;
        }
        running_status = 0;
      } else if (status == 0xf0 || status == 0xf7) {  // sysex
        r.need(r.varLen());
        running_status = 0;
      } else {
        running_status = status;
        const int kind = status >> 4;
        const int channel = status & 0x0f;
        const int d1 = r.u8();
        const int d2 = (kind == 0xc || kind == 0xd) ? 0 : r.u8();
        detail::RawMidiEvent ev;
        ev.tick = tick;
        ev.channel = channel;
        ev.order = order++;
        if (kind == 0x9 && d2 > 0) {
          ev.type = 1;
          ev.a = d1;
          ev.b = d2;
          events.push_back(ev);
        } else if (kind == 0x8 || (kind == 0x9 && d2 == 0)) {
          ev.type = 0;
          ev.a = d1;
          events.push_back(ev);
        } else if (kind == 0xb && d1 == 64) {
          ev.type = 2;
          ev.a = d2;
          events.push_back(ev);
        }
      }
    }
    r.seek(track_end);
  }

  const detail::TempoMap tempo_map(std::move(tempo_changes), division);

  // Same-tick ordering: offs and pedal changes before ons, then stream order.
  std::sort(events.begin(), events.end(),
            [](const detail::RawMidiEvent& a, const detail::RawMidiEvent& b) {
              if (a.tick != b.tick) return a.tick < b.tick;
              if (a.type != b.type) return a.type < b.type;
              return a.order < b.order;
            });

  struct Sounding {
    double onset_s;
    int velocity;
  };
  struct RawNote {
    int pitch;
    double onset_s;
    double offset_s;
    int velocity;
    int channel;
  };
  std::map<std::pair<int, int>, Sounding> open;  // (channel, pitch) -> sounding
  std::vector<RawNote> raw;
  // Pedal hold intervals [down_s, up_s) per channel.
  std::map<int, std::vector<std::pair<double, double>>> pedal;
  std::map<int, double> pedal_down_at;

  for (const detail::RawMidiEvent& ev : events) {
    const double t = tempo_map.seconds(ev.tick);
    if (ev.type == 1) {
      const auto key = std::make_pair(ev.channel, ev.a);
      if (auto it = open.find(key); it != open.end()) {
        if (t > it->second.onset_s) {
          raw.push_back({ev.a, it->second.onset_s, t, it->second.velocity, ev.channel});
        }
        open.erase(it);
      }
      open[key] = {t, ev.b};
    } else if (ev.type == 0) {
      const auto key = std::make_pair(ev.channel, ev.a);
      if (auto it = open.find(key); it != open.end()) {
        if (t > it->second.onset_s) {
          raw.push_back({ev.a, it->second.onset_s, t, it->second.velocity, ev.channel});
        }
        open.erase(it);
      }
    } else if (ev.type == 2) {
      const bool down = ev.a >= 64;
      auto held = pedal_down_at.find(ev.channel);
      if (down && held == pedal_down_at.end()) {
        pedal_down_at[ev.channel] = t;
      } else if (!down && held != pedal_down_at.end()) {
        pedal[ev.channel].emplace_back(held->second, t);
        pedal_down_at.erase(held);
      }
    }
  }

  const double end_s = tempo_map.seconds(max_tick);
  for (const auto& [key, sounding] : open) {
    warn("parse_midi: dangling note-on (pitch " + std::to_string(key.second) +
         ") closed at end of track in " + path);
    if (end_s > sounding.onset_s) {
      raw.push_back({key.second, sounding.onset_s, end_s, sounding.velocity, key.first});
    }
  }
  for (const auto& [channel, down_at] : pedal_down_at) {
    pedal[channel].emplace_back(down_at, end_s);
  }

  // Sustain extension: an offset falling inside a hold interval moves to the
  // pedal release, truncated at the next re-onset of the same pitch.
  for (RawNote& note : raw) {
    const auto it = pedal.find(note.channel);
    if (it == pedal.end()) continue;
    double extended = note.offset_s;
    for (const auto& [down_s, up_s] : it->second) {
      if (note.offset_s >= down_s && note.offset_s < up_s) {
        extended = up_s;
        break;
      }
    }
    if (extended > note.offset_s) {
      for (const RawNote& other : raw) {
        if (other.channel == note.channel && other.pitch == note.pitch &&
            other.onset_s >= note.offset_s && other.onset_s < extended &&
            other.onset_s > note.onset_s) {
          extended = other.onset_s;
        }
      }
      note.offset_s = std::max(note.offset_s, extended);
    }
  }

  NoteList out;
  out.notes.reserve(raw.size());
  for (const RawNote& note : raw) {
    out.notes.push_back({note.pitch, note.onset_s, note.offset_s, std::max(1, note.velocity)});
  }
  sortNotes(out.notes);
  return out;
}

/// Writes SMF type 0 at 480 ticks per quarter and a fixed 120 BPM, so one tick
/// is 1/960 s. Round-tripping through parseMidi reproduces times to one tick.
inline void writeMidi(const NoteList& notes, const std::string& path) {
  constexpr int kPpq = 480;
  constexpr std::int64_t kTempoUs = 500000;  // 120 BPM
  constexpr double kTicksPerSecond = 1e6 * kPpq / kTempoUs;

  struct TrackEvent {
    std::int64_t tick;
    bool is_on;
    int channel;
    int pitch;
    int velocity;
  };
  std::vector<TrackEvent> evs;
  evs.reserve(notes.notes.size() * 2);
  // Same-pitch overlapping notes cannot share a channel (the off of one would
  // close the other), so notes are spread greedily over the 16 channels.
  std::int64_t busy_until[16][128] = {};
  std::vector<NoteEvent> sorted = notes.notes;
  sortNotes(sorted);
  for (const NoteEvent& n : sorted) {
    if (n.pitch < 0 || n.pitch > 127) {
      throw DomainError("write_midi: pitch " + std::to_string(n.pitch) + " outside 0-127");
    }
    if (n.velocity < 1 || n.velocity > 127) {
      throw DomainError("write_midi: velocity " + std::to_string(n.velocity) + " outside 1-127");
    }
    const auto on = std::llround(n.onset_s * kTicksPerSecond);
    const auto off = std::max(on + 1, std::llround(n.offset_s * kTicksPerSecond));
    int channel = 0;
    while (channel < 15 && busy_until[channel][n.pitch] > on) ++channel;
    busy_until[channel][n.pitch] = off;
    evs.push_back({on, true, channel, n.pitch, n.velocity});
    evs.push_back({off, false, channel, n.pitch, 0});
  }
  std::sort(evs.begin(), evs.end(), [](const TrackEvent& a, const TrackEvent& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.is_on != b.is_on) return !a.is_on;  // offs first
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    return a.channel < b.channel;
  });

  std::vector<unsigned char> track;
  auto putVarLen = [&track](std::int64_t v) {
    unsigned char buf[4];
    int n = 0;
    buf[n++] = static_cast<unsigned char>(v & 0x7f);
    while ((v >>= 7) > 0) buf[n++] = static_cast<unsigned char>(0x80 | (v & 0x7f));
    while (n > 0) track.push_back(buf[--n]);
  };

  // Tempo meta at tick 0.
  putVarLen(0);
  track.insert(track.end(), {0xff, 0x51, 0x03, static_cast<unsigned char>(kTempoUs >> 16),
                             static_cast<unsigned char>((kTempoUs >> 8) & 0xff),
                             static_cast<unsigned char>(kTempoUs & 0xff)});
  std::int64_t tick = 0;
  for (const TrackEvent& ev : evs) {
    putVarLen(ev.tick - tick);
    tick = ev.tick;
    track.push_back(static_cast<unsigned char>((ev.is_on ? 0x90 : 0x80) | ev.channel));
    track.push_back(static_cast<unsigned char>(ev.pitch));
    track.push_back(static_cast<unsigned char>(ev.is_on ? ev.velocity : 64));
  }
  putVarLen(0);
  track.insert(track.end(), {0xff, 0x2f, 0x00});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_midi: cannot open file for writing: " + path);
  auto putU32 = [&out](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>((v >> 16) & 0xff),
                       static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
    out.write(b, 4);
  };
  auto putU16 = [&out](std::uint16_t v) {
    const char b[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(b, 2);
  };
  out.write("MThd", 4);
  putU32(6);
  putU16(0);
  putU16(1);
  putU16(kPpq);
  out.write("MTrk", 4);
  putU32(static_cast<std::uint32_t>(track.size()));
  out.write(reinterpret_cast<const char*>(track.data()), static_cast<std::streamsize>(track.size()));
  if (!out) throw IoError("write_midi: failed writing file: " + path);
}

}  // namespace vpmix
