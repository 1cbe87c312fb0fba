// Batch orchestration: seeded mixture generation over source catalogs,
// manifest replay, directory-level evaluation, onset-overlap statistics,
// dataset splits, and per-file analysis. This is the layer the CLI drives.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vpmix/audio.hpp"
#include "vpmix/catalog.hpp"
#include "vpmix/config.hpp"
#include "vpmix/errors.hpp"
#include "vpmix/manifest.hpp"
#include "vpmix/metrics.hpp"
#include "vpmix/midi.hpp"
#include "vpmix/mixer.hpp"
#include "vpmix/rng.hpp"
#include "vpmix/spectral.hpp"
#include "vpmix/version.hpp"
#include "vpmix/wav.hpp"

namespace vpmix {

/// Everything a batch run needs, resolved from a flat config file. See the
/// README for the key reference.
struct PipelineConfig {
  Config raw;
  MixStrategy strategy = MixStrategy::kRandom;
  int count = 0;
  std::uint64_t seed = 0;
  std::string piano_catalog_path;
  std::string violin_catalog_path;
  std::string out_dir;
  MixParams mix;
  int mix_rate_hz = 0;  // 0 = the piano source's native rate
  OnsetPickParams onset;
  MatchConfig match;
  bool eval_velocity = true;
  int jobs = 1;
  int overlap_pairs = 50;
  std::vector<MixStrategy> overlap_strategies;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
};

inline PipelineConfig loadPipelineConfig(const Config& cfg) {
  PipelineConfig pc;
  pc.raw = cfg;
  pc.strategy = parseStrategy(cfg.getString("strategy", "random"));
  pc.count = static_cast<int>(cfg.getInt("count", 10));
  pc.seed = cfg.getUint("seed", 0);
  pc.piano_catalog_path = cfg.getString("piano_catalog", "");
  pc.violin_catalog_path = cfg.getString("violin_catalog", "");
  pc.out_dir = cfg.getString("out_dir", "out");

  if (cfg.has("rms_ratio")) {
    const double fixed = cfg.getDouble("rms_ratio", 0.5);
    pc.mix.rms_ratio = {fixed, fixed};
  }
  if (cfg.has("rms_range")) {
    const auto range = cfg.getDoubleList("rms_range");
    if (range.size() != 2) throw DomainError("config: rms_range wants two numbers 'lo hi'");
    pc.mix.rms_ratio = {range[0], range[1]};
  }
  pc.mix.piano_excerpt_s = cfg.getDouble("piano_excerpt_s", 20.0);
  pc.mix.violin_extra_s = cfg.getDouble("violin_extra_s", 5.5);
  pc.mix.peak_cap = cfg.getDouble("peak_cap", 0.99);
  pc.mix.onset_tolerance_frames = static_cast<int>(cfg.getInt("onset_tolerance_frames", 0));
  pc.mix.key_retry_limit = static_cast<int>(cfg.getInt("key_retry_limit", 100));
  pc.mix.hop_s = cfg.getDouble("hop_s", kHopSeconds);
  pc.mix.rng_seed = pc.seed;
  validateMixParams(pc.mix);

  pc.mix_rate_hz = static_cast<int>(cfg.getInt("mix_rate", 0));
  if (pc.mix_rate_hz != 0 && pc.mix_rate_hz < 8000) {
    throw DomainError("config: mix_rate must be 0 (native) or >= 8000");
  }

  pc.onset.pre_max = static_cast<int>(cfg.getInt("onset_pre_max", 1));
  pc.onset.post_max = static_cast<int>(cfg.getInt("onset_post_max", 1));
  pc.onset.pre_avg = static_cast<int>(cfg.getInt("onset_pre_avg", 3));
  pc.onset.post_avg = static_cast<int>(cfg.getInt("onset_post_avg", 3));
  pc.onset.delta = cfg.getDouble("onset_delta", 0.07);
  pc.onset.wait = static_cast<int>(cfg.getInt("onset_wait", 1));
  pc.mix.onset_pick = pc.onset;

  pc.match.onset_tol_s = cfg.getDouble("eval_onset_tol_s", 0.05);
  pc.match.offset_min_tol_s = cfg.getDouble("eval_offset_min_tol_s", 0.05);
  pc.match.offset_ratio = cfg.getDouble("eval_offset_ratio", 0.2);
  pc.match.velocity_tol = cfg.getDouble("eval_velocity_tol", 0.1);
  pc.match.frame_hop_s = cfg.getDouble("eval_frame_hop_s", kHopSeconds);
  pc.eval_velocity = cfg.getBool("eval_velocity", true);

  pc.jobs = std::max(1, static_cast<int>(cfg.getInt("jobs", 1)));
  pc.overlap_pairs = static_cast<int>(cfg.getInt("pairs", 50));
  for (const std::string& name : cfg.getStringList("strategies")) {
    pc.overlap_strategies.push_back(parseStrategy(name));
  }
  if (pc.overlap_strategies.empty()) {
    pc.overlap_strategies = {MixStrategy::kRandom, MixStrategy::kOnset};
  }
  const auto ratios = cfg.getDoubleList("ratios");
  if (!ratios.empty()) {
    if (ratios.size() != 3) throw DomainError("config: ratios wants three numbers 'train val test'");
    pc.split_ratios = {ratios[0], ratios[1], ratios[2]};
  }
  return pc;
}

namespace detail {

/// Thread-safe, load-once caches for source audio and labels. Sources are
/// immutable for the life of a batch, so entries never invalidate.
class SourceStore {
 public:
  std::shared_ptr<const AudioClip> audio(const std::string& path) {
    {
      const std::lock_guard<std::mutex> lock(mutex_);
      if (const auto it = audio_.find(path); it != audio_.end()) return it->second;
    }
    auto clip = std::make_shared<const AudioClip>(readWav(path));
    const std::lock_guard<std::mutex> lock(mutex_);
    return audio_.emplace(path, std::move(clip)).first->second;
  }

  std::shared_ptr<const NoteList> notes(const std::string& path) {
    {
      const std::lock_guard<std::mutex> lock(mutex_);
      if (const auto it = notes_.find(path); it != notes_.end()) return it->second;
    }
    auto list = std::make_shared<const NoteList>(parseMidi(path));
    const std::lock_guard<std::mutex> lock(mutex_);
    return notes_.emplace(path, std::move(list)).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const AudioClip>> audio_;
  std::map<std::string, std::shared_ptr<const NoteList>> notes_;
};

/// Notes with onsets inside [start, start + duration), rebased to the window
/// start; offsets clamp to the window end.
inline NoteList sliceNotes(const NoteList& notes, double start_s, double duration_s) {
  NoteList out;
  for (const NoteEvent& n : notes.notes) {
    if (n.onset_s < start_s || n.onset_s >= start_s + duration_s) continue;
    NoteEvent moved = n;
    moved.onset_s = n.onset_s - start_s;
    moved.offset_s = std::min(n.offset_s - start_s, duration_s);
    if (moved.offset_s > moved.onset_s) out.notes.push_back(moved);
  }
  return out;
}

inline AudioClip loadExcerpt(SourceStore& store, const CatalogEntry& entry, const SourceSpan& span,
                             int target_rate_hz) {
  const auto source = store.audio(entry.audio_path);
  AudioClip cut = excerpt(*source, span);
  if (target_rate_hz != 0 && cut.sample_rate_hz != target_rate_hz) {
    cut = resample(cut, target_rate_hz);
  }
  return cut;
}

inline AudioClip toAnalysisRate(const AudioClip& clip) {
  return clip.sample_rate_hz == kInternalRateHz ? clip : resample(clip, kInternalRateHz);
}

inline KeyLabel keyOfExcerpt(SourceStore& store, const CatalogEntry& entry, const SourceSpan& span) {
  if (entry.key) return *entry.key;
  return estimateKey(chromagram(toAnalysisRate(loadExcerpt(store, entry, span, 0))));
}

inline std::string itemFileName(int item, const char* extension) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mix_%06d.%s", item, extension);
  return buf;
}

}  // namespace detail

struct MixBatchSummary {
  int requested = 0;
  int generated = 0;
  int failed = 0;
  std::string manifest_path;
  std::vector<std::string> failures;
};

/// Generates `count` mixtures under the configured strategy. Per-item seeds
/// are global_seed XOR item_index, so outputs do not depend on worker count.
/// Per-item failures are recorded and skipped, never aborting the batch.
inline MixBatchSummary runMix(const PipelineConfig& cfg) {
  if (cfg.piano_catalog_path.empty() || cfg.violin_catalog_path.empty()) {
    throw DomainError("mix: config must set piano_catalog and violin_catalog");
  }
  if (cfg.count <= 0) throw DomainError("mix: count must be positive");
  const SourceCatalog piano_catalog = loadCatalog(cfg.piano_catalog_path);
  const SourceCatalog violin_catalog = loadCatalog(cfg.violin_catalog_path);
  const std::vector<std::size_t> pianos = piano_catalog.byInstrument("piano");
  const std::vector<std::size_t> violins = violin_catalog.byInstrument("violin");
  if (pianos.empty()) throw DomainError("mix: no piano entries in " + cfg.piano_catalog_path);
  if (violins.empty()) throw DomainError("mix: no violin entries in " + cfg.violin_catalog_path);
  for (const std::size_t i : pianos) {
    if (piano_catalog.entries[i].midi_path.empty()) {
      throw DomainError("mix: piano entry '" + piano_catalog.entries[i].source_id +
                        "' has no midi_path (labels are required)");
    }
  }
  std::filesystem::create_directories(cfg.out_dir);

  detail::SourceStore store;
  struct Slot {
    bool ok = false;
    ManifestRecord record;
    std::string error;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(cfg.count));

  const auto run_item = [&](int item) {
    std::mt19937_64 rng = itemRng(cfg.seed, static_cast<std::uint64_t>(item));

    // Piano excerpt.
    const CatalogEntry& pe =
        piano_catalog.entries[pianos[uniformIndex(rng, pianos.size())]];
    const WavInfo pinfo = readWavInfo(pe.audio_path);
    if (pinfo.durationS() < cfg.mix.piano_excerpt_s) {
      throw DomainError("piano source '" + pe.source_id + "' shorter than excerpt (" +
                        std::to_string(pinfo.durationS()) + " s)");
    }
    SourceSpan piano_span{pe.source_id,
                          uniformRange(rng, 0.0, pinfo.durationS() - cfg.mix.piano_excerpt_s),
                          cfg.mix.piano_excerpt_s};

    const int mix_rate = cfg.mix_rate_hz != 0 ? cfg.mix_rate_hz : pinfo.sample_rate_hz;
    MixInput piano;
    piano.clip = detail::loadExcerpt(store, pe, piano_span, mix_rate);
    piano.span = piano_span;
    piano.notes = detail::sliceNotes(*store.notes(pe.midi_path), piano_span.start_s,
                                     piano_span.duration_s);
    if (rms(piano.clip) <= 1e-6) {
      throw DomainError("piano excerpt of '" + pe.source_id + "' at " +
                        std::to_string(piano_span.start_s) + " s is silent");
    }

    const bool wants_key =
        cfg.strategy == MixStrategy::kKey || cfg.strategy == MixStrategy::kKeyOnset;
    if (wants_key) {
      piano.key = pe.key ? *pe.key : estimateKey(chromagram(detail::toAnalysisRate(piano.clip)));
    }

    // Violin excerpt per strategy.
    const double violin_len = cfg.strategy == MixStrategy::kOriginalPair
                                  ? cfg.mix.piano_excerpt_s
                                  : cfg.mix.piano_excerpt_s + cfg.mix.violin_extra_s;
    const CatalogEntry* ve = nullptr;
    SourceSpan violin_span;
    bool key_fallback = false;
    std::optional<KeyLabel> violin_key;

    const auto draw_uniform = [&](std::mt19937_64& r) {
      const CatalogEntry& entry =
          violin_catalog.entries[violins[uniformIndex(r, violins.size())]];
      const WavInfo vinfo = readWavInfo(entry.audio_path);
      if (vinfo.durationS() < violin_len) {
        throw DomainError("violin source '" + entry.source_id + "' shorter than excerpt (" +
                          std::to_string(vinfo.durationS()) + " s)");
      }
      const double start = uniformRange(r, 0.0, vinfo.durationS() - violin_len);
      return std::make_pair(&entry, SourceSpan{entry.source_id, start, violin_len});
    };

    if (cfg.strategy == MixStrategy::kOriginalPair) {
      ve = violin_catalog.findByPieceId(pe.piece_id, "violin");
      if (ve == nullptr) {
        throw DomainError("no violin source for piece '" + pe.piece_id + "' (original_pair)");
      }
      violin_span = {ve->source_id, piano_span.start_s, violin_len};
    } else if (wants_key) {
      std::map<std::string, const CatalogEntry*> drawn;
      const auto sampler = [&](std::mt19937_64& r) {
        const auto [entry, span] = draw_uniform(r);
        drawn[span.source_id] = entry;
        return std::make_pair(span, detail::keyOfExcerpt(store, *entry, span));
      };
      const ViolinSelection sel = selectViolinExcerpt(*piano.key, sampler, cfg.mix, rng);
      violin_span = sel.span;
      violin_key = sel.key;
      key_fallback = sel.fallback;
      ve = drawn.at(violin_span.source_id);
    } else {
      const auto [entry, span] = draw_uniform(rng);
      ve = entry;
      violin_span = span;
    }

    MixInput violin;
    violin.clip = detail::loadExcerpt(store, *ve, violin_span, mix_rate);
    violin.span = violin_span;
    violin.key = violin_key;
    if (!ve->midi_path.empty()) {
      violin.notes = detail::sliceNotes(*store.notes(ve->midi_path), violin_span.start_s,
                                        violin_span.duration_s);
    }
    if (rms(violin.clip) <= 1e-6) {
      throw DomainError("violin excerpt of '" + ve->source_id + "' at " +
                        std::to_string(violin_span.start_s) + " s is silent");
    }

    MixResult result = mixPair(piano, violin, cfg.strategy, cfg.mix, rng);
    result.recipe.seed = cfg.seed ^ static_cast<std::uint64_t>(item);
    result.recipe.key_fallback = key_fallback;

    ManifestRecord record;
    record.item = item;
    record.recipe = result.recipe;
    record.audio_path = detail::itemFileName(item, "wav");
    record.midi_path = detail::itemFileName(item, "mid");
    writeWav(result.mixture, (std::filesystem::path(cfg.out_dir) / record.audio_path).string());
    writeMidi(result.labels, (std::filesystem::path(cfg.out_dir) / record.midi_path).string());
    return record;
  };

  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int item = next.fetch_add(1); item < cfg.count; item = next.fetch_add(1)) {
      Slot& slot = slots[static_cast<std::size_t>(item)];
      try {
        slot.record = run_item(item);
        slot.ok = true;
      } catch (const Error& e) {
        slot.error = "item " + std::to_string(item) + ": " + e.what();
      }
    }
  };
  if (cfg.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  Manifest manifest;
  manifest.header.version = kVersion;
  {
    std::ostringstream hex;
    hex << std::hex << cfg.raw.hash();
    manifest.header.config_hash = hex.str();
  }
  manifest.header.seed = cfg.seed;
  manifest.header.piano_catalog = std::filesystem::absolute(cfg.piano_catalog_path).string();
  manifest.header.violin_catalog = std::filesystem::absolute(cfg.violin_catalog_path).string();

  MixBatchSummary summary;
  summary.requested = cfg.count;
  for (const Slot& slot : slots) {
    if (slot.ok) {
      manifest.records.push_back(slot.record);
      ++summary.generated;
    } else {
      ++summary.failed;
      summary.failures.push_back(slot.error);
    }
  }
  summary.manifest_path = (std::filesystem::path(cfg.out_dir) / "manifest.jsonl").string();
  writeManifest(manifest, summary.manifest_path);
  return summary;
}

/// Regenerates every mixture recorded in a manifest, sample-exactly, into
/// out_dir. Catalog paths come from the manifest header.
inline MixBatchSummary runReplay(const std::string& manifest_path, const std::string& out_dir,
                                 int jobs = 1) {
  const Manifest manifest = readManifest(manifest_path);
  const SourceCatalog piano_catalog = loadCatalog(manifest.header.piano_catalog);
  const SourceCatalog violin_catalog = loadCatalog(manifest.header.violin_catalog);
  std::filesystem::create_directories(out_dir);

  detail::SourceStore store;
  struct Slot {
    bool ok = false;
    std::string error;
  };
  std::vector<Slot> slots(manifest.records.size());

  const auto run_record = [&](const ManifestRecord& record) {
    const MixRecipe& recipe = record.recipe;
    const CatalogEntry* pe = piano_catalog.findBySourceId(recipe.piano_span.source_id);
    const CatalogEntry* ve = violin_catalog.findBySourceId(recipe.violin_span.source_id);
    if (pe == nullptr || ve == nullptr) {
      throw DomainError("replay: source '" +
                        (pe == nullptr ? recipe.piano_span.source_id
                                       : recipe.violin_span.source_id) +
                        "' not in catalog");
    }
    const AudioClip piano = detail::loadExcerpt(store, *pe, recipe.piano_span, recipe.mix_rate_hz);
    const AudioClip violin =
        detail::loadExcerpt(store, *ve, recipe.violin_span, recipe.mix_rate_hz);

    const AudioClip violin_scaled = scale(violin, recipe.violin_gain);
    const auto offset = static_cast<std::size_t>(
        std::llround(recipe.shift_frames * recipe.hop_s * recipe.mix_rate_hz));
    AudioClip mixture = mixAt(violin_scaled, piano, offset);
    if (recipe.post_gain < 1.0) {
      mixture = scale(mixture, recipe.post_gain);
      for (double& s : mixture.samples) s = std::clamp(s, -recipe.peak_cap, recipe.peak_cap);
    }
    writeWav(mixture, (std::filesystem::path(out_dir) / record.audio_path).string());

    if (!pe->midi_path.empty()) {
      const NoteList sliced = detail::sliceNotes(*store.notes(pe->midi_path),
                                                 recipe.piano_span.start_s,
                                                 recipe.piano_span.duration_s);
      writeMidi(shiftNotes(sliced, recipe.shift_frames * recipe.hop_s),
                (std::filesystem::path(out_dir) / record.midi_path).string());
    }
  };

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < manifest.records.size(); i = next.fetch_add(1)) {
      try {
        run_record(manifest.records[i]);
        slots[i].ok = true;
      } catch (const Error& e) {
        slots[i].error = "item " + std::to_string(manifest.records[i].item) + ": " + e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  MixBatchSummary summary;
  summary.requested = static_cast<int>(manifest.records.size());
  summary.manifest_path = manifest_path;
  for (const Slot& slot : slots) {
    if (slot.ok) ++summary.generated;
    else {
      ++summary.failed;
      summary.failures.push_back(slot.error);
    }
  }
  return summary;
}

struct EvalSummary {
  std::vector<std::pair<std::string, EvalCounts>> pieces;
  std::vector<std::string> unpaired;
  bool velocity = true;

  MetricReport macroReport() const {
    MetricReport mean;
    if (pieces.empty()) return mean;
    const auto add = [](PRF& acc, const PRF& x) {
      acc.precision += x.precision;
      acc.recall += x.recall;
      acc.f1 += x.f1;
    };
    for (const auto& [name, counts] : pieces) {
      const MetricReport r = reportFromCounts(counts);
      add(mean.frame, r.frame);
      add(mean.note_onset, r.note_onset);
      add(mean.note_offset, r.note_offset);
      add(mean.note_offset_velocity, r.note_offset_velocity);
    }
    const double n = static_cast<double>(pieces.size());
    for (PRF* prf : {&mean.frame, &mean.note_onset, &mean.note_offset, &mean.note_offset_velocity}) {
      prf->precision /= n;
      prf->recall /= n;
      prf->f1 /= n;
    }
    return mean;
  }

  MetricReport microReport() const {
    EvalCounts pooled;
    for (const auto& [name, counts] : pieces) {
      pooled.n_ref += counts.n_ref;
      pooled.n_est += counts.n_est;
      pooled.matched_onset += counts.matched_onset;
      pooled.matched_offset += counts.matched_offset;
      pooled.matched_velocity += counts.matched_velocity;
      pooled.frame_tp += counts.frame_tp;
      pooled.frame_fp += counts.frame_fp;
      pooled.frame_fn += counts.frame_fn;
    }
    return reportFromCounts(pooled);
  }
};

namespace detail {

inline nlohmann::json reportToJson(const MetricReport& report, bool velocity) {
  const auto prf = [](const PRF& p) {
    return nlohmann::json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
  };
  nlohmann::json j;
  j["frame"] = prf(report.frame);
  j["note_onset"] = prf(report.note_onset);
  j["note_offset"] = prf(report.note_offset);
  j["note_offset_velocity"] = velocity ? prf(report.note_offset_velocity) : nlohmann::json();
  return j;
}

inline void appendReportRow(std::ostringstream& out, const std::string& name,
                            const MetricReport& report, bool velocity) {
  const auto cell = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * v);
    return std::string(buf);
  };
  out << name;
  for (std::size_t pad = name.size(); pad < 28; ++pad) out << ' ';
  for (const PRF* prf : {&report.frame, &report.note_onset, &report.note_offset}) {
    out << "  " << cell(prf->precision) << ' ' << cell(prf->recall) << ' ' << cell(prf->f1);
  }
  if (velocity) {
    out << "  " << cell(report.note_offset_velocity.precision) << ' '
        << cell(report.note_offset_velocity.recall) << ' '
        << cell(report.note_offset_velocity.f1);
  } else {
    out << "       -      -      -";
  }
  out << '\n';
}

}  // namespace detail

/// Renders the per-piece and aggregate table in the P/R/F1-times-four-families
/// column layout, in percent.
inline std::string evalTable(const EvalSummary& summary) {
  std::ostringstream out;
  out << "piece                           ------- Frame -------  --- Note w/ onset ---"
         "  --- Note w/ offset --  - Note w/ off + vel -\n";
  out << "                                     P      R     F1       P      R     F1"
         "       P      R     F1       P      R     F1\n";
  for (const auto& [name, counts] : summary.pieces) {
    detail::appendReportRow(out, name, reportFromCounts(counts), summary.velocity);
  }
  detail::appendReportRow(out, "[macro avg]", summary.macroReport(), summary.velocity);
  detail::appendReportRow(out, "[micro pooled]", summary.microReport(), summary.velocity);
  return out.str();
}

inline nlohmann::json evalToJson(const EvalSummary& summary) {
  nlohmann::json pieces = nlohmann::json::object();
  for (const auto& [name, counts] : summary.pieces) {
    pieces[name] = detail::reportToJson(reportFromCounts(counts), summary.velocity);
  }
  nlohmann::json j;
  j["pieces"] = pieces;
  j["macro"] = detail::reportToJson(summary.macroReport(), summary.velocity);
  j["micro"] = detail::reportToJson(summary.microReport(), summary.velocity);
  j["unpaired"] = summary.unpaired;
  return j;
}

/// Evaluates every reference MIDI in ref_dir against the same-named file in
/// est_dir. Unpaired files on either side are listed and skipped.
inline EvalSummary runEval(const std::string& ref_dir, const std::string& est_dir,
                           const MatchConfig& cfg, bool velocity = true) {
  const auto list_midi = [](const std::string& dir) {
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(dir)) {
      throw IoError("eval: not a directory: " + dir);
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string ext = entry.path().extension().string();
      if (ext == ".mid" || ext == ".midi") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
  };

  const std::vector<std::string> refs = list_midi(ref_dir);
  const std::vector<std::string> ests = list_midi(est_dir);

  EvalSummary summary;
  summary.velocity = velocity;
  for (const std::string& name : refs) {
    if (!std::binary_search(ests.begin(), ests.end(), name)) {
      summary.unpaired.push_back("ref-only: " + name);
      continue;
    }
    const NoteList ref = parseMidi((std::filesystem::path(ref_dir) / name).string());
    const NoteList est = parseMidi((std::filesystem::path(est_dir) / name).string());
    summary.pieces.emplace_back(name, evaluateCounts(ref, est, cfg));
  }
  for (const std::string& name : ests) {
    if (!std::binary_search(refs.begin(), refs.end(), name)) {
      summary.unpaired.push_back("est-only: " + name);
    }
  }
  return summary;
}

/// One overlap-statistics row: how well a sampled pair's onsets align at the
/// shift each strategy would use.
struct OverlapRow {
  int pair_id = 0;
  MixStrategy strategy = MixStrategy::kRandom;
  int shift = 0;
  int overlap = 0;
  int piano_onsets = 0;
  int violin_onsets = 0;
};

inline std::string overlapCsv(const std::vector<OverlapRow>& rows) {
  std::ostringstream out;
  out << "pair_id,strategy,shift,overlap,piano_onset_count,violin_onset_count\n";
  for (const OverlapRow& row : rows) {
    out << row.pair_id << ',' << strategyName(row.strategy) << ',' << row.shift << ','
        << row.overlap << ',' << row.piano_onsets << ',' << row.violin_onsets << '\n';
  }
  return out.str();
}

/// Samples excerpt pairs like runMix and reports onset overlap at shift 0
/// (random/key/original_pair) and at the best shift (onset/key_onset), one CSV
/// row per pair and strategy.
inline std::vector<OverlapRow> runOverlapStats(const PipelineConfig& cfg) {
  if (cfg.piano_catalog_path.empty() || cfg.violin_catalog_path.empty()) {
    throw DomainError("overlap-stats: config must set piano_catalog and violin_catalog");
  }
  const SourceCatalog piano_catalog = loadCatalog(cfg.piano_catalog_path);
  const SourceCatalog violin_catalog = loadCatalog(cfg.violin_catalog_path);
  const std::vector<std::size_t> pianos = piano_catalog.byInstrument("piano");
  const std::vector<std::size_t> violins = violin_catalog.byInstrument("violin");
  if (pianos.empty() || violins.empty()) {
    throw DomainError("overlap-stats: empty piano or violin catalog");
  }

  detail::SourceStore store;
  const double piano_len = cfg.mix.piano_excerpt_s;
  const double violin_len = piano_len + cfg.mix.violin_extra_s;
  const int max_shift = static_cast<int>(std::floor(cfg.mix.violin_extra_s / cfg.mix.hop_s));

  const auto grid_for = [&](const CatalogEntry& entry, const SourceSpan& span) {
    const int n_frames = 1 + static_cast<int>(std::floor(span.duration_s / cfg.mix.hop_s + 1e-9));
    if (!entry.midi_path.empty()) {
      return notesToOnsetGrid(detail::sliceNotes(*store.notes(entry.midi_path), span.start_s,
                                                 span.duration_s),
                              cfg.mix.hop_s, n_frames);
    }
    return detectOnsets(detail::toAnalysisRate(loadExcerpt(store, entry, span, 0)), cfg.onset);
  };

  std::vector<OverlapRow> rows;
  for (int pair_id = 0; pair_id < cfg.overlap_pairs; ++pair_id) {
    std::mt19937_64 rng = itemRng(cfg.seed, static_cast<std::uint64_t>(pair_id));
    const CatalogEntry& pe = piano_catalog.entries[pianos[uniformIndex(rng, pianos.size())]];
    const WavInfo pinfo = readWavInfo(pe.audio_path);
    if (pinfo.durationS() < piano_len) continue;
    const SourceSpan piano_span{pe.source_id,
                                uniformRange(rng, 0.0, pinfo.durationS() - piano_len), piano_len};

    const CatalogEntry& ve = violin_catalog.entries[violins[uniformIndex(rng, violins.size())]];
    const WavInfo vinfo = readWavInfo(ve.audio_path);
    if (vinfo.durationS() < violin_len) continue;
    const SourceSpan violin_span{ve.source_id,
                                 uniformRange(rng, 0.0, vinfo.durationS() - violin_len),
                                 violin_len};

    const OnsetGrid piano_grid = grid_for(pe, piano_span);
    const OnsetGrid violin_grid = grid_for(ve, violin_span);
    for (const MixStrategy strategy : cfg.overlap_strategies) {
      OverlapRow row;
      row.pair_id = pair_id;
      row.strategy = strategy;
      row.piano_onsets = static_cast<int>(piano_grid.onset_frames.size());
      row.violin_onsets = static_cast<int>(violin_grid.onset_frames.size());
      if (strategy == MixStrategy::kOnset || strategy == MixStrategy::kKeyOnset) {
        const auto [shift, overlap] =
            bestShift(piano_grid, violin_grid, max_shift, cfg.mix.onset_tolerance_frames);
        row.shift = shift;
        row.overlap = overlap;
      } else {
        row.shift = 0;
        row.overlap = countOverlap(piano_grid, violin_grid, 0, cfg.mix.onset_tolerance_frames);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

/// Piece-level dataset split over a catalog; see splitPieces for the
/// composer-balancing rule.
inline SplitSpec runSplit(const std::string& catalog_path, const std::array<double, 3>& ratios,
                          std::uint64_t seed) {
  const SourceCatalog catalog = loadCatalog(catalog_path, /*check_files=*/false);
  if (catalog.entries.empty()) throw DomainError("split: empty catalog");
  return splitPieces(catalogPieces(catalog), ratios, seed);
}

/// Key and onset dump for one audio file.
inline nlohmann::json runAnalyze(const std::string& audio_path, const OnsetPickParams& params) {
  const AudioClip clip = readWav(audio_path);
  const AudioClip analysis = detail::toAnalysisRate(clip);
  nlohmann::json j;
  j["path"] = audio_path;
  j["duration_s"] = clip.durationS();
  j["sample_rate_hz"] = clip.sample_rate_hz;
  j["rms"] = rms(clip);
  try {
    j["estimated_key"] = keyName(estimateKey(chromagram(analysis)));
  } catch (const DomainError&) {
    j["estimated_key"] = nlohmann::json();  // silent or atonal input
  }
  const OnsetGrid grid = detectOnsets(analysis, params);
  j["hop_s"] = grid.hop_s;
  j["n_frames"] = grid.n_frames;
  j["onset_frames"] = grid.onset_frames;
  std::vector<double> times;
  times.reserve(grid.onset_frames.size());
  for (const int f : grid.onset_frames) times.push_back(f * grid.hop_s);
  j["onset_times_s"] = times;
  return j;
}

}  // namespace vpmix
