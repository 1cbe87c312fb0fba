// Dataset manifests: JSON-lines, one header line then one MixRecipe record
// per generated mixture. Append-only and byte-deterministic for a given
// (config, seed), so re-runs diff clean and every record replays exactly.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpmix/errors.hpp"
#include "vpmix/key.hpp"
#include "vpmix/mixer.hpp"
#include "vpmix/version.hpp"

namespace vpmix {

struct ManifestHeader {
  std::string version = kVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string piano_catalog;
  std::string violin_catalog;
};

struct ManifestRecord {
  int item = 0;
  MixRecipe recipe;
  std::string audio_path;  // relative to the manifest's directory
  std::string midi_path;
};

struct Manifest {
  ManifestHeader header;
  std::vector<ManifestRecord> records;
};

namespace detail {

inline nlohmann::json spanToJson(const SourceSpan& span) {
  return {{"source_id", span.source_id}, {"start_s", span.start_s}, {"duration_s", span.duration_s}};
}

inline SourceSpan spanFromJson(const nlohmann::json& j) {
  return {j.at("source_id").get<std::string>(), j.at("start_s").get<double>(),
          j.at("duration_s").get<double>()};
}

}  // namespace detail

/// Strategy string as recorded in manifests; a key-filtered mix that exhausted
/// its retries is recorded as the fallback variant.
inline std::string recordedStrategy(const MixRecipe& recipe) {
  std::string name = strategyName(recipe.strategy);
  if (recipe.key_fallback) name += "_with_fallback";
  return name;
}

inline nlohmann::json recipeToJson(const MixRecipe& recipe) {
  nlohmann::json j;
  j["strategy"] = recordedStrategy(recipe);
  j["piano"] = detail::spanToJson(recipe.piano_span);
  j["violin"] = detail::spanToJson(recipe.violin_span);
  j["rms_ratio"] = recipe.rms_ratio;
  j["violin_gain"] = recipe.violin_gain;
  j["shift_frames"] = recipe.shift_frames;
  j["post_gain"] = recipe.post_gain;
  j["piano_key"] = recipe.piano_key ? nlohmann::json(keyName(*recipe.piano_key)) : nlohmann::json();
  j["violin_key"] =
      recipe.violin_key ? nlohmann::json(keyName(*recipe.violin_key)) : nlohmann::json();
  j["overlap_count"] =
      recipe.overlap_count ? nlohmann::json(*recipe.overlap_count) : nlohmann::json();
  j["seed"] = recipe.seed;
  j["mix_rate_hz"] = recipe.mix_rate_hz;
  j["hop_s"] = recipe.hop_s;
  j["peak_cap"] = recipe.peak_cap;
  return j;
}

inline MixRecipe recipeFromJson(const nlohmann::json& j) {
  MixRecipe recipe;
  std::string strategy = j.at("strategy").get<std::string>();
  const std::string suffix = "_with_fallback";
  if (strategy.size() > suffix.size() &&
      strategy.compare(strategy.size() - suffix.size(), suffix.size(), suffix) == 0) {
    recipe.key_fallback = true;
    strategy.resize(strategy.size() - suffix.size());
  }
  recipe.strategy = parseStrategy(strategy);
  recipe.piano_span = detail::spanFromJson(j.at("piano"));
  recipe.violin_span = detail::spanFromJson(j.at("violin"));
  recipe.rms_ratio = j.at("rms_ratio").get<double>();
  recipe.violin_gain = j.at("violin_gain").get<double>();
  recipe.shift_frames = j.at("shift_frames").get<int>();
  recipe.post_gain = j.at("post_gain").get<double>();
  if (!j.at("piano_key").is_null()) recipe.piano_key = parseKeyName(j["piano_key"].get<std::string>());
  if (!j.at("violin_key").is_null()) {
    recipe.violin_key = parseKeyName(j["violin_key"].get<std::string>());
  }
  if (!j.at("overlap_count").is_null()) recipe.overlap_count = j["overlap_count"].get<int>();
  recipe.seed = j.at("seed").get<std::uint64_t>();
  recipe.mix_rate_hz = j.at("mix_rate_hz").get<int>();
  recipe.hop_s = j.at("hop_s").get<double>();
  recipe.peak_cap = j.value("peak_cap", 0.99);
  return recipe;
}

inline void writeManifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
  if (!out) throw IoError("manifest: cannot open file for writing: " + path);
  nlohmann::json header;
  header["type"] = "header";
  header["version"] = manifest.header.version;
  header["config_hash"] = manifest.header.config_hash;
  header["seed"] = manifest.header.seed;
  header["piano_catalog"] = manifest.header.piano_catalog;
  header["violin_catalog"] = manifest.header.violin_catalog;
  out << header.dump() << "\n";
  for (const ManifestRecord& record : manifest.records) {
    nlohmann::json j = recipeToJson(record.recipe);
    j["type"] = "record";
    j["item"] = record.item;
    j["audio"] = record.audio_path;
    j["midi"] = record.midi_path;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("manifest: failed writing file: " + path);
}

inline Manifest readManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open file: " + path);
  Manifest manifest;
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest: bad JSON on line " + std::to_string(line_no) + " of " + path +
                        ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      manifest.header.version = j.value("version", "");
      manifest.header.config_hash = j.value("config_hash", "");
      manifest.header.seed = j.value("seed", std::uint64_t{0});
      manifest.header.piano_catalog = j.value("piano_catalog", "");
      manifest.header.violin_catalog = j.value("violin_catalog", "");
      have_header = true;
    } else if (type == "record") {
      ManifestRecord record;
      record.item = j.at("item").get<int>();
      record.recipe = recipeFromJson(j);
      record.audio_path = j.at("audio").get<std::string>();
      record.midi_path = j.at("midi").get<std::string>();
      manifest.records.push_back(std::move(record));
    } else {
      throw FormatError("manifest: unknown line type on line " + std::to_string(line_no) + " of " +
                        path);
    }
  }
  if (!have_header) throw FormatError("manifest: missing header line in " + path);
  return manifest;
}

}  // namespace vpmix
