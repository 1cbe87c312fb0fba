// Source catalogs (JSON) and composer-balanced piece-level dataset splits.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpmix/errors.hpp"
#include "vpmix/key.hpp"
#include "vpmix/rng.hpp"

namespace vpmix {

struct CatalogEntry {
  std::string source_id;
  std::string instrument;  // "piano" or "violin"
  std::string audio_path;
  std::string midi_path;  // empty when the source has no labels
  std::string piece_id;   // defaults to source_id
  std::string composer;
  std::optional<KeyLabel> key;  // optional whole-source key annotation
};

/// Catalog of solo sources. Entries are validated on load: unique source_ids
/// and, unless disabled, referenced files present on disk.
struct SourceCatalog {
  std::vector<CatalogEntry> entries;

  std::vector<std::size_t> byInstrument(const std::string& instrument) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].instrument == instrument) out.push_back(i);
    }
    return out;
  }

  const CatalogEntry* findBySourceId(const std::string& source_id) const {
    for (const CatalogEntry& e : entries) {
      if (e.source_id == source_id) return &e;
    }
    return nullptr;
  }

  const CatalogEntry* findByPieceId(const std::string& piece_id,
                                    const std::string& instrument) const {
    for (const CatalogEntry& e : entries) {
      if (e.piece_id == piece_id && e.instrument == instrument) return &e;
    }
    return nullptr;
  }
};

/// Loads a catalog from a JSON array of entry objects. Relative paths resolve
/// against the catalog file's directory.
inline SourceCatalog loadCatalog(const std::string& path, bool check_files = true) {
  std::ifstream in(path);
  if (!in) throw IoError("catalog: cannot open file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("catalog: invalid JSON in " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw FormatError("catalog: top-level JSON must be an array in " + path);

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const auto resolve = [&base](const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };

  SourceCatalog catalog;
  std::set<std::string> seen_ids;
  for (const auto& item : doc) {
    CatalogEntry entry;
    if (!item.contains("source_id") || !item.contains("instrument") ||
        !item.contains("audio_path")) {
      throw FormatError("catalog: entry missing source_id/instrument/audio_path in " + path);
    }
    entry.source_id = item["source_id"].get<std::string>();
    entry.instrument = item["instrument"].get<std::string>();
    entry.audio_path = resolve(item["audio_path"].get<std::string>());
    if (item.contains("midi_path") && !item["midi_path"].is_null()) {
      entry.midi_path = resolve(item["midi_path"].get<std::string>());
    }
    entry.piece_id = item.value("piece_id", entry.source_id);
    entry.composer = item.value("composer", std::string());
    if (item.contains("key") && !item["key"].is_null()) {
      entry.key = parseKeyName(item["key"].get<std::string>());
    }
    if (entry.instrument != "piano" && entry.instrument != "violin") {
      throw FormatError("catalog: instrument must be piano or violin, got '" + entry.instrument +
                        "' for " + entry.source_id);
    }
    if (!seen_ids.insert(entry.source_id).second) {
      throw FormatError("catalog: duplicate source_id '" + entry.source_id + "' in " + path);
    }
    if (check_files) {
      if (!std::filesystem::exists(entry.audio_path)) {
        throw IoError("catalog: audio file missing for '" + entry.source_id +
                      "': " + entry.audio_path);
      }
      if (!entry.midi_path.empty() && !std::filesystem::exists(entry.midi_path)) {
        throw IoError("catalog: midi file missing for '" + entry.source_id +
                      "': " + entry.midi_path);
      }
    }
    catalog.entries.push_back(std::move(entry));
  }
  return catalog;
}

constexpr std::array<const char*, 3> kSplitNames = {"train", "validation", "test"};

/// piece_id -> split index (0 train, 1 validation, 2 test). Always a
/// partition of the catalog's pieces.
struct SplitSpec {
  std::map<std::string, int> assignment;

  std::array<std::vector<std::string>, 3> bySplit() const {
    std::array<std::vector<std::string>, 3> out;
    for (const auto& [piece, split] : assignment) out[static_cast<std::size_t>(split)].push_back(piece);
    return out;
  }
};

/// Piece-level split with a greedy composer-balancing pass: each piece goes to
/// the split where its composer is least represented, preferring splits with
/// the most remaining capacity, so no split becomes composer-exclusive where
/// avoidable. Deterministic under the seed.
inline SplitSpec splitPieces(const std::vector<std::pair<std::string, std::string>>& pieces,
                             const std::array<double, 3>& ratios, std::uint64_t seed) {
  double ratio_sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw DomainError("split: ratios must be non-negative");
    ratio_sum += r;
  }
  if (std::fabs(ratio_sum - 1.0) > 1e-6) throw DomainError("split: ratios must sum to 1");

  const std::size_t n = pieces.size();
  int nonzero_splits = 0;
  for (double r : ratios) nonzero_splits += r > 0.0 ? 1 : 0;
  if (static_cast<int>(n) < nonzero_splits) {
    throw DomainError("split: fewer pieces (" + std::to_string(n) + ") than splits (" +
                      std::to_string(nonzero_splits) + ")");
  }

  // Target sizes by largest remainder.
  std::array<std::size_t, 3> target{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = ratios[static_cast<std::size_t>(k)] * static_cast<double>(n);
    target[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[static_cast<std::size_t>(k)] = exact - std::floor(exact + 1e-9);
    assigned += target[static_cast<std::size_t>(k)];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (remainder[static_cast<std::size_t>(k)] > remainder[static_cast<std::size_t>(best)] + 1e-12) best = k;
    }
    ++target[static_cast<std::size_t>(best)];
    remainder[static_cast<std::size_t>(best)] = -1.0;
    ++assigned;
  }

  // Seeded shuffle, then group by composer, biggest composer first.
  std::vector<std::pair<std::string, std::string>> shuffled = pieces;
  std::mt19937_64 rng(seed);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[uniformIndex(rng, i)]);
  }
  std::map<std::string, std::vector<std::string>> by_composer;
  for (const auto& [piece, composer] : shuffled) {
    by_composer[composer.empty() ? "(unknown:" + piece + ")" : composer].push_back(piece);
  }
  std::vector<const std::pair<const std::string, std::vector<std::string>>*> composers;
  for (const auto& entry : by_composer) composers.push_back(&entry);
  std::sort(composers.begin(), composers.end(), [](const auto* a, const auto* b) {
    if (a->second.size() != b->second.size()) return a->second.size() > b->second.size();
    return a->first < b->first;
  });

  SplitSpec spec;
  std::array<std::size_t, 3> used{};
  for (const auto* composer : composers) {
    std::array<int, 3> of_this_composer{};
    for (const std::string& piece : composer->second) {
      int best = -1;
      for (int k = 0; k < 3; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (used[ku] >= target[ku]) continue;
        if (best < 0) {
          best = k;
          continue;
        }
        const auto bu = static_cast<std::size_t>(best);
        const auto mine = of_this_composer[ku];
        const auto theirs = of_this_composer[bu];
        const auto my_room = target[ku] - used[ku];
        const auto their_room = target[bu] - used[bu];
        if (mine < theirs || (mine == theirs && my_room > their_room)) best = k;
      }
      spec.assignment[piece] = best;
      ++used[static_cast<std::size_t>(best)];
      ++of_this_composer[static_cast<std::size_t>(best)];
    }
  }
  return spec;
}

/// Unique (piece_id, composer) pairs across the catalog, in first-seen order.
inline std::vector<std::pair<std::string, std::string>> catalogPieces(const SourceCatalog& catalog) {
  std::vector<std::pair<std::string, std::string>> pieces;
  std::set<std::string> seen;
  for (const CatalogEntry& e : catalog.entries) {
    if (seen.insert(e.piece_id).second) pieces.emplace_back(e.piece_id, e.composer);
  }
  return pieces;
}

inline nlohmann::json splitToJson(const SplitSpec& spec) {
  nlohmann::json out;
  const auto by_split = spec.bySplit();
  for (int k = 0; k < 3; ++k) {
    out[kSplitNames[static_cast<std::size_t>(k)]] = by_split[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace vpmix
