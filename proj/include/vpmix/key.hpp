// Tonal key estimation by Krumhansl-Kessler template correlation, plus the
// harmonic-compatibility rule used to pair violin excerpts with a piano key.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "vpmix/errors.hpp"
#include "vpmix/spectral.hpp"

namespace vpmix {

enum class Mode { kMajor, kMinor };

/// One of the 24 tonal keys: tonic pitch class 0 = C ... 11 = B plus mode.
struct KeyLabel {
  int tonic = 0;
  Mode mode = Mode::kMajor;

  friend bool operator==(const KeyLabel&, const KeyLabel&) = default;
};

namespace detail {

// Krumhansl-Kessler probe-tone profiles (standard constants).
constexpr std::array<double, 12> kKkMajor = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                             2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
constexpr std::array<double, 12> kKkMinor = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                             2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

inline double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < 12; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= 12.0;
  my /= 12.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

/// Correlates the chroma against all 24 rotated K-K profiles and returns the
/// argmax. Ties break toward the lower pitch class, major before minor.
inline KeyLabel estimateKey(const ChromaVector& chroma) {
  KeyLabel best;
  double best_r = -2.0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::kMajor, Mode::kMinor}) {
      const auto& profile = mode == Mode::kMajor ? detail::kKkMajor : detail::kKkMinor;
      std::array<double, 12> rotated{};
      for (int pc = 0; pc < 12; ++pc) rotated[pc] = profile[(pc - tonic + 12) % 12];
      const double r = detail::pearson(chroma.weights, rotated);
      if (r > best_r) {
        best_r = r;
        best = {tonic, mode};
      }
    }
  }
  return best;
}

/// Keys a violin excerpt may be in for a given piano key: the key itself plus
/// the dominant and subdominant as harmonically-related keys. For major tonic
/// T that is {T, T+7, T+5 major, T+5 minor}; for minor tonic t it is
/// {t minor, t+7 major, t+5 minor, t+7 minor}. Always 4 keys, always
/// containing the argument.
inline std::array<KeyLabel, 4> compatibleKeys(const KeyLabel& key) {
  const int t = key.tonic;
  if (key.mode == Mode::kMajor) {
    return {KeyLabel{t, Mode::kMajor}, KeyLabel{(t + 7) % 12, Mode::kMajor},
            KeyLabel{(t + 5) % 12, Mode::kMajor}, KeyLabel{(t + 5) % 12, Mode::kMinor}};
  }
  return {KeyLabel{t, Mode::kMinor}, KeyLabel{(t + 7) % 12, Mode::kMajor},
          KeyLabel{(t + 5) % 12, Mode::kMinor}, KeyLabel{(t + 7) % 12, Mode::kMinor}};
}

inline bool keyCompatible(const KeyLabel& piano_key, const KeyLabel& violin_key) {
  for (const KeyLabel& k : compatibleKeys(piano_key)) {
    if (k == violin_key) return true;
  }
  return false;
}

/// "C", "C#", ... "B" with an "m" suffix for minor keys. Sharps only.
inline std::string keyName(const KeyLabel& key) {
  static constexpr const char* kNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                             "F#", "G",  "G#", "A",  "A#", "B"};
  std::string name = kNames[key.tonic];
  if (key.mode == Mode::kMinor) name += "m";
  return name;
}

/// Parses names like "E", "F#m", "Bb", "Abm". Accepts sharps and flats.
inline KeyLabel parseKeyName(std::string_view name) {
  if (name.empty()) throw DomainError("parse_key: empty key name");
  static constexpr int kBase[] = {9, 11, 0, 2, 4, 5, 7};  // A B C D E F G
  const char letter = name[0];
  if (letter < 'A' || letter > 'G') {
    throw DomainError("parse_key: bad key letter in '" + std::string(name) + "'");
  }
  int tonic = kBase[letter - 'A'];
  std::size_t pos = 1;
  if (pos < name.size() && (name[pos] == '#' || name[pos] == 'b')) {
    tonic = (tonic + (name[pos] == '#' ? 1 : 11)) % 12;
    ++pos;
  }
  Mode mode = Mode::kMajor;
  if (pos < name.size() && name[pos] == 'm') {
    mode = Mode::kMinor;
    ++pos;
  }
  if (pos != name.size()) {
    throw DomainError("parse_key: trailing characters in '" + std::string(name) + "'");
  }
  return {tonic, mode};
}

}  // namespace vpmix
