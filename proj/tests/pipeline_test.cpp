// Tests for pipeline_cli internals: config files, catalogs, splits, batch
// mixing with manifests, replay, directory evaluation, and overlap stats.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "testutil.hpp"
#include "vpmix/catalog.hpp"
#include "vpmix/config.hpp"
#include "vpmix/manifest.hpp"
#include "vpmix/pipeline.hpp"
#include "vpmix/wav.hpp"

namespace vpmix {
namespace {

using testutil::note;
using testutil::noteList;
using testutil::TempDir;

std::string readFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << path;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Builds a small synthetic corpus: piano and violin sources as click trains
// with matching MIDI labels, all at 16 kHz, plus catalog JSON files.
struct Fixture {
  explicit Fixture(const TempDir& dir, std::uint64_t seed = 1234, int n_sources = 3,
                   double source_s = 8.0)
      : root(dir.path().string()) {
    std::mt19937_64 rng(seed);
    nlohmann::json piano_entries = nlohmann::json::array();
    nlohmann::json violin_entries = nlohmann::json::array();
    const char* keys[] = {"C", "G", "Am", "F", "E"};

    for (int s = 0; s < n_sources; ++s) {
      const auto make_source = [&](const std::string& id, const std::string& instrument,
                                   int pitch_base) {
        std::vector<double> times;
        std::vector<NoteEvent> notes;
        double t = 0.25 + 0.09 * static_cast<double>(rng() % 4);
        while (t < source_s - 0.5) {
          times.push_back(t);
          notes.push_back(note(pitch_base + static_cast<int>(rng() % 12), t, t + 0.15,
                               20 + static_cast<int>(rng() % 100)));
          t += 0.28 + 0.4 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        }
        const AudioClip clip = testutil::clickTrain(times, source_s, 16000, 0.55);
        writeWav(clip, root + "/" + id + ".wav");
        writeMidi(noteList(std::move(notes)), root + "/" + id + ".mid");
        nlohmann::json entry;
        entry["source_id"] = id;
        entry["instrument"] = instrument;
        entry["audio_path"] = id + ".wav";
        entry["midi_path"] = id + ".mid";
        entry["piece_id"] = "piece" + std::to_string(s);
        entry["composer"] = "composer" + std::to_string(s % 2);
        entry["key"] = keys[s % 5];
        return entry;
      };
      piano_entries.push_back(make_source("p" + std::to_string(s), "piano", 55));
      violin_entries.push_back(make_source("v" + std::to_string(s), "violin", 76));
    }

    piano_catalog = root + "/piano_catalog.json";
    violin_catalog = root + "/violin_catalog.json";
    std::ofstream(piano_catalog) << piano_entries.dump(2);
    std::ofstream(violin_catalog) << violin_entries.dump(2);
  }

  std::string configText(const std::string& strategy, int count, std::uint64_t seed,
                         const std::string& out_dir) const {
    std::ostringstream cfg;
    cfg << "strategy = " << strategy << "\n"
        << "count = " << count << "\n"
        << "seed = " << seed << "\n"
        << "piano_catalog = " << piano_catalog << "\n"
        << "violin_catalog = " << violin_catalog << "\n"
        << "out_dir = " << out_dir << "\n"
        << "piano_excerpt_s = 2.0\n"
        << "violin_extra_s = 0.5\n";
    return cfg.str();
  }

  std::string root;
  std::string piano_catalog;
  std::string violin_catalog;
};

TEST(Config, ParseAndTypes) {
  const Config cfg = Config::fromText(
      "strategy = onset   # comment\n"
      "\n"
      "count=25\n"
      "rms_range = 0.3 1.2\n"
      "eval_velocity = false\n");
  EXPECT_EQ(cfg.getString("strategy", ""), "onset");
  EXPECT_EQ(cfg.getInt("count", 0), 25);
  EXPECT_EQ(cfg.getDoubleList("rms_range"), (std::vector<double>{0.3, 1.2}));
  EXPECT_FALSE(cfg.getBool("eval_velocity", true));
  EXPECT_EQ(cfg.getInt("missing", 7), 7);
  EXPECT_THROW(Config::fromText("no equals sign here"), DomainError);
  EXPECT_THROW(cfg.getInt("strategy", 0), DomainError);
}

TEST(Config, HashIsOrderInsensitiveAndValueSensitive) {
  const Config a = Config::fromText("x = 1\ny = 2\n");
  const Config b = Config::fromText("y = 2\nx = 1\n");
  const Config c = Config::fromText("x = 1\ny = 3\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Catalog, LoadResolvesRelativePathsAndValidates) {
  TempDir dir("catalog");
  const Fixture fixture(dir);
  const SourceCatalog catalog = loadCatalog(fixture.piano_catalog);
  ASSERT_EQ(catalog.entries.size(), 3u);
  EXPECT_TRUE(std::filesystem::path(catalog.entries[0].audio_path).is_absolute());
  EXPECT_EQ(catalog.entries[0].instrument, "piano");
  ASSERT_TRUE(catalog.entries[0].key.has_value());
  EXPECT_EQ(keyName(*catalog.entries[0].key), "C");
}

TEST(Catalog, RejectsDuplicatesAndMissingFiles) {
  TempDir dir("catalog_bad");
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < 2; ++i) {
    nlohmann::json e;
    e["source_id"] = "dup";
    e["instrument"] = "piano";
    e["audio_path"] = "nope.wav";
    entries.push_back(e);
  }
  const std::string path = dir.file("cat.json");
  std::ofstream(path) << entries.dump();
  EXPECT_THROW(loadCatalog(path), Error);  // missing file or duplicate, both rejected
  EXPECT_THROW(loadCatalog(dir.file("missing.json")), IoError);
}

TEST(Split, PaperSizesPartitionAndDeterminism) {
  std::vector<std::pair<std::string, std::string>> pieces;
  for (int i = 0; i < 45; ++i) {
    pieces.emplace_back("piece" + std::to_string(i), "composer" + std::to_string(i % 23));
  }
  const std::array<double, 3> ratios = {32.0 / 45.0, 3.0 / 45.0, 10.0 / 45.0};
  const SplitSpec spec = splitPieces(pieces, ratios, 11);
  const auto by_split = spec.bySplit();
  EXPECT_EQ(by_split[0].size(), 32u);
  EXPECT_EQ(by_split[1].size(), 3u);
  EXPECT_EQ(by_split[2].size(), 10u);
  EXPECT_EQ(spec.assignment.size(), 45u);  // partition: every piece exactly once

  const SplitSpec again = splitPieces(pieces, ratios, 11);
  EXPECT_EQ(spec.assignment, again.assignment);
  const SplitSpec other = splitPieces(pieces, ratios, 12);
  EXPECT_NE(spec.assignment, other.assignment);
}

TEST(Split, ComposerSpreadAcrossSplits) {
  // One composer with many pieces must not be exclusive to one split.
  std::vector<std::pair<std::string, std::string>> pieces;
  for (int i = 0; i < 12; ++i) pieces.emplace_back("big" + std::to_string(i), "prolific");
  for (int i = 0; i < 8; ++i) {
    pieces.emplace_back("small" + std::to_string(i), "composer" + std::to_string(i));
  }
  const SplitSpec spec = splitPieces(pieces, {0.5, 0.25, 0.25}, 3);
  std::set<int> splits_of_prolific;
  for (int i = 0; i < 12; ++i) {
    splits_of_prolific.insert(spec.assignment.at("big" + std::to_string(i)));
  }
  EXPECT_EQ(splits_of_prolific.size(), 3u);
}

TEST(Split, EdgeCases) {
  EXPECT_THROW(splitPieces({}, {1.0, 0.0, 0.0}, 0), DomainError);  // fewer pieces than splits
  const SplitSpec one = splitPieces({{"only", "x"}}, {1.0, 0.0, 0.0}, 0);
  EXPECT_EQ(one.assignment.at("only"), 0);
  EXPECT_THROW(splitPieces({{"a", "x"}, {"b", "y"}}, {0.5, 0.3, 0.1}, 0), DomainError);
}

TEST(RunMix, GeneratesFilesAndDeterministicManifest) {
  TempDir dir("mix_det");
  const Fixture fixture(dir);
  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("random", 6, 7, out)));

  const MixBatchSummary first = runMix(cfg);
  EXPECT_EQ(first.generated, 6);
  EXPECT_EQ(first.failed, 0);
  const std::string manifest_a = readFileBytes(first.manifest_path);

  const MixBatchSummary second = runMix(cfg);
  const std::string manifest_b = readFileBytes(second.manifest_path);
  EXPECT_EQ(manifest_a, manifest_b);  // byte-identical

  const Manifest manifest = readManifest(first.manifest_path);
  ASSERT_EQ(manifest.records.size(), 6u);
  for (const ManifestRecord& record : manifest.records) {
    const std::string wav_path = out + "/" + record.audio_path;
    ASSERT_TRUE(std::filesystem::exists(wav_path));
    const AudioClip mixture = readWav(wav_path);
    EXPECT_LE(peak(mixture), 0.99 + 1e-12);
    EXPECT_GE(record.recipe.rms_ratio, 0.3);
    EXPECT_LE(record.recipe.rms_ratio, 1.2);
    EXPECT_EQ(record.recipe.shift_frames, 0);  // random strategy never shifts
    EXPECT_TRUE(std::filesystem::exists(out + "/" + record.midi_path));
  }
}

TEST(RunMix, WorkerCountDoesNotChangeOutputs) {
  TempDir dir("mix_jobs");
  const Fixture fixture(dir);
  const std::string out1 = dir.file("out1");
  const std::string out2 = dir.file("out2");

  Config base = Config::fromText(fixture.configText("onset", 8, 99, out1));
  const MixBatchSummary serial = runMix(loadPipelineConfig(base));
  base.set("out_dir", out2);
  base.set("jobs", "4");
  const MixBatchSummary parallel = runMix(loadPipelineConfig(base));

  const Manifest a = readManifest(serial.manifest_path);
  const Manifest b = readManifest(parallel.manifest_path);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(readFileBytes(out1 + "/" + a.records[i].audio_path),
              readFileBytes(out2 + "/" + b.records[i].audio_path));
  }
}

TEST(RunMix, KeyStrategyRespectsCompatibility) {
  TempDir dir("mix_key");
  const Fixture fixture(dir, 555, 5);
  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("key", 10, 21, out)));

  const MixBatchSummary summary = runMix(cfg);
  EXPECT_EQ(summary.generated, 10);
  const Manifest manifest = readManifest(summary.manifest_path);
  for (const ManifestRecord& record : manifest.records) {
    ASSERT_TRUE(record.recipe.piano_key.has_value());
    ASSERT_TRUE(record.recipe.violin_key.has_value());
    if (!record.recipe.key_fallback) {
      EXPECT_TRUE(keyCompatible(*record.recipe.piano_key, *record.recipe.violin_key))
          << keyName(*record.recipe.piano_key) << " vs " << keyName(*record.recipe.violin_key);
    }
  }
}

TEST(RunMix, OnsetStrategyDominatesShiftZero) {
  TempDir dir("mix_onset");
  const Fixture fixture(dir, 777, 4);
  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("onset", 8, 31, out)));

  const MixBatchSummary summary = runMix(cfg);
  EXPECT_EQ(summary.generated, 8);
  const Manifest manifest = readManifest(summary.manifest_path);
  const SourceCatalog pianos = loadCatalog(fixture.piano_catalog);
  const SourceCatalog violins = loadCatalog(fixture.violin_catalog);

  for (const ManifestRecord& record : manifest.records) {
    ASSERT_TRUE(record.recipe.overlap_count.has_value());
    // Recompute both grids from the recorded spans and check dominance.
    const auto grid = [&](const SourceCatalog& catalog, const SourceSpan& span) {
      const CatalogEntry* entry = catalog.findBySourceId(span.source_id);
      const NoteList sliced =
          detail::sliceNotes(*std::make_shared<NoteList>(parseMidi(entry->midi_path)),
                             span.start_s, span.duration_s);
      const int n_frames = 1 + static_cast<int>(std::floor(span.duration_s / 0.032 + 1e-9));
      return notesToOnsetGrid(sliced, 0.032, n_frames);
    };
    const OnsetGrid piano_grid = grid(pianos, record.recipe.piano_span);
    const OnsetGrid violin_grid = grid(violins, record.recipe.violin_span);
    EXPECT_EQ(countOverlap(piano_grid, violin_grid, record.recipe.shift_frames, 0),
              *record.recipe.overlap_count);
    EXPECT_GE(*record.recipe.overlap_count, countOverlap(piano_grid, violin_grid, 0, 0));
  }
}

TEST(RunMix, KeyOnsetStrategySatisfiesBothProperties) {
  TempDir dir("mix_keyonset");
  const Fixture fixture(dir, 606, 4);
  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("key_onset", 8, 13, out)));

  const MixBatchSummary summary = runMix(cfg);
  EXPECT_EQ(summary.generated, 8);
  const Manifest manifest = readManifest(summary.manifest_path);
  const SourceCatalog pianos = loadCatalog(fixture.piano_catalog);
  const SourceCatalog violins = loadCatalog(fixture.violin_catalog);
  for (const ManifestRecord& record : manifest.records) {
    // Key membership (unless the retry limit forced a fallback).
    ASSERT_TRUE(record.recipe.piano_key.has_value());
    ASSERT_TRUE(record.recipe.violin_key.has_value());
    if (!record.recipe.key_fallback) {
      EXPECT_TRUE(keyCompatible(*record.recipe.piano_key, *record.recipe.violin_key));
    }
    // Onset dominance over shift 0.
    ASSERT_TRUE(record.recipe.overlap_count.has_value());
    const auto grid = [&](const SourceCatalog& catalog, const SourceSpan& span) {
      const CatalogEntry* entry = catalog.findBySourceId(span.source_id);
      const NoteList sliced =
          detail::sliceNotes(parseMidi(entry->midi_path), span.start_s, span.duration_s);
      const int n_frames = 1 + static_cast<int>(std::floor(span.duration_s / 0.032 + 1e-9));
      return notesToOnsetGrid(sliced, 0.032, n_frames);
    };
    const OnsetGrid piano_grid = grid(pianos, record.recipe.piano_span);
    const OnsetGrid violin_grid = grid(violins, record.recipe.violin_span);
    EXPECT_GE(*record.recipe.overlap_count, countOverlap(piano_grid, violin_grid, 0, 0));
  }
}

TEST(RunMix, LabelsAreShiftedCopiesOfTheSource) {
  TempDir dir("mix_labels");
  const Fixture fixture(dir, 888, 2);
  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("onset", 4, 5, out)));

  const MixBatchSummary summary = runMix(cfg);
  const Manifest manifest = readManifest(summary.manifest_path);
  const SourceCatalog pianos = loadCatalog(fixture.piano_catalog);
  for (const ManifestRecord& record : manifest.records) {
    const NoteList labels = parseMidi(out + "/" + record.midi_path);
    const CatalogEntry* entry = pianos.findBySourceId(record.recipe.piano_span.source_id);
    const NoteList source = parseMidi(entry->midi_path);
    const NoteList expected =
        shiftNotes(detail::sliceNotes(source, record.recipe.piano_span.start_s,
                                      record.recipe.piano_span.duration_s),
                   record.recipe.shift_frames * record.recipe.hop_s);
    ASSERT_EQ(labels.notes.size(), expected.notes.size());
    for (std::size_t i = 0; i < labels.notes.size(); ++i) {
      EXPECT_EQ(labels.notes[i].pitch, expected.notes[i].pitch);
      EXPECT_NEAR(labels.notes[i].onset_s, expected.notes[i].onset_s, 1.0 / 960.0);
    }
  }
}

TEST(RunMix, PerItemFailuresAreSkippedNotFatal) {
  TempDir dir("mix_fail");
  const Fixture fixture(dir, 999, 2, /*source_s=*/8.0);
  // A piano source far too short for the excerpt makes some items fail.
  writeWav(testutil::clickTrain({0.2}, 0.8, 16000), fixture.root + "/short.wav");
  writeMidi(noteList({note(60, 0.2, 0.4)}), fixture.root + "/short.mid");
  nlohmann::json entries;
  std::ifstream(fixture.piano_catalog) >> entries;
  nlohmann::json extra;
  extra["source_id"] = "short";
  extra["instrument"] = "piano";
  extra["audio_path"] = "short.wav";
  extra["midi_path"] = "short.mid";
  entries.push_back(extra);
  std::ofstream(fixture.piano_catalog) << entries.dump();

  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("random", 12, 3, out)));
  const MixBatchSummary summary = runMix(cfg);
  EXPECT_GT(summary.failed, 0);
  EXPECT_GT(summary.generated, 0);
  EXPECT_EQ(summary.generated + summary.failed, 12);
  const Manifest manifest = readManifest(summary.manifest_path);
  EXPECT_EQ(static_cast<int>(manifest.records.size()), summary.generated);
}

TEST(Replay, ReproducesWavsSampleExactly) {
  TempDir dir("replay");
  const Fixture fixture(dir, 313, 3);
  const std::string out = dir.file("out");
  const PipelineConfig cfg =
      loadPipelineConfig(Config::fromText(fixture.configText("key_onset", 5, 17, out)));

  const MixBatchSummary summary = runMix(cfg);
  EXPECT_EQ(summary.generated, 5);

  const std::string replay_out = dir.file("replayed");
  const MixBatchSummary replayed = runReplay(summary.manifest_path, replay_out);
  EXPECT_EQ(replayed.generated, 5);

  const Manifest manifest = readManifest(summary.manifest_path);
  for (const ManifestRecord& record : manifest.records) {
    EXPECT_EQ(readFileBytes(out + "/" + record.audio_path),
              readFileBytes(replay_out + "/" + record.audio_path))
        << record.audio_path;
    EXPECT_EQ(readFileBytes(out + "/" + record.midi_path),
              readFileBytes(replay_out + "/" + record.midi_path));
  }
}

TEST(RunEval, IdentityDirectoryScoresAllOnes) {
  TempDir dir("eval_identity");
  std::filesystem::create_directories(dir.file("ref"));
  std::mt19937_64 rng(1);
  for (int piece = 0; piece < 3; ++piece) {
    std::vector<NoteEvent> notes;
    for (int i = 0; i < 20; ++i) {
      const double onset = static_cast<double>(rng() % 8000) / 1000.0;
      notes.push_back(note(30 + static_cast<int>(rng() % 60), onset, onset + 0.3,
                           1 + static_cast<int>(rng() % 127)));
    }
    writeMidi(noteList(std::move(notes)), dir.file("ref/piece" + std::to_string(piece) + ".mid"));
  }
  std::filesystem::copy(dir.file("ref"), dir.file("est"));

  const EvalSummary summary = runEval(dir.file("ref"), dir.file("est"), MatchConfig{});
  ASSERT_EQ(summary.pieces.size(), 3u);
  const MetricReport micro = summary.microReport();
  EXPECT_EQ(micro.frame.f1, 1.0);
  EXPECT_EQ(micro.note_onset.f1, 1.0);
  EXPECT_EQ(micro.note_offset.f1, 1.0);
  EXPECT_EQ(micro.note_offset_velocity.f1, 1.0);
  const MetricReport macro = summary.macroReport();
  EXPECT_EQ(macro.note_onset.f1, 1.0);
}

TEST(RunEval, EmptyEstimatesScoreZeroAndUnpairedListed) {
  TempDir dir("eval_empty");
  std::filesystem::create_directories(dir.file("ref"));
  std::filesystem::create_directories(dir.file("est"));
  writeMidi(noteList({note(60, 0.5, 1.0), note(64, 1.0, 2.0)}), dir.file("ref/a.mid"));
  writeMidi(NoteList{}, dir.file("est/a.mid"));
  writeMidi(NoteList{}, dir.file("est/orphan.mid"));
  writeMidi(noteList({note(60, 0.5, 1.0)}), dir.file("ref/only_ref.mid"));

  const EvalSummary summary = runEval(dir.file("ref"), dir.file("est"), MatchConfig{});
  ASSERT_EQ(summary.pieces.size(), 1u);
  const MetricReport report = reportFromCounts(summary.pieces[0].second);
  EXPECT_EQ(report.note_onset.precision, 0.0);
  EXPECT_EQ(report.note_onset.recall, 0.0);
  EXPECT_EQ(summary.unpaired.size(), 2u);
}

TEST(RunEval, SinglePairMatchesDirectEvaluate) {
  TempDir dir("eval_single");
  std::filesystem::create_directories(dir.file("ref"));
  std::filesystem::create_directories(dir.file("est"));
  std::mt19937_64 rng(22);
  std::vector<NoteEvent> ref_notes, est_notes;
  for (int i = 0; i < 15; ++i) {
    const double onset = static_cast<double>(rng() % 5000) / 1000.0;
    const NoteEvent n = note(40 + static_cast<int>(rng() % 40), onset, onset + 0.4,
                             1 + static_cast<int>(rng() % 127));
    ref_notes.push_back(n);
    NoteEvent e = n;
    e.onset_s += 0.01 * static_cast<double>(rng() % 5);
    est_notes.push_back(e);
  }
  const NoteList ref = noteList(std::move(ref_notes));
  const NoteList est = noteList(std::move(est_notes));
  writeMidi(ref, dir.file("ref/x.mid"));
  writeMidi(est, dir.file("est/x.mid"));

  const EvalSummary summary = runEval(dir.file("ref"), dir.file("est"), MatchConfig{});
  ASSERT_EQ(summary.pieces.size(), 1u);
  // Compare against a direct evaluate() of the MIDI round-tripped lists.
  const MetricReport direct = evaluate(parseMidi(dir.file("ref/x.mid")),
                                       parseMidi(dir.file("est/x.mid")), MatchConfig{});
  const MetricReport via_dir = reportFromCounts(summary.pieces[0].second);
  EXPECT_EQ(via_dir.note_onset.f1, direct.note_onset.f1);
  EXPECT_EQ(via_dir.frame.f1, direct.frame.f1);
  EXPECT_EQ(via_dir.note_offset_velocity.f1, direct.note_offset_velocity.f1);
}

TEST(OverlapStats, ConstructedShiftGivesFullOverlapAndRowCount) {
  TempDir dir("overlap");
  const std::string root = dir.path().string();
  // Violin onsets are exactly piano onsets delayed by 5 frames. Sources are
  // exactly one excerpt long so both windows always start at 0 and the 5-frame
  // relation survives into the excerpts.
  nlohmann::json piano_entries = nlohmann::json::array();
  nlohmann::json violin_entries = nlohmann::json::array();
  std::mt19937_64 rng(4);
  for (int s = 0; s < 1; ++s) {  // single source pair: every draw hits the constructed relation
    std::vector<NoteEvent> piano_notes, violin_notes;
    double t = 0.3;
    while (t < 3.6) {
      piano_notes.push_back(note(60, t, t + 0.1));
      violin_notes.push_back(note(76, t + 5 * 0.032, t + 5 * 0.032 + 0.1));
      t += 0.3 + 0.2 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
    const std::string pid = "p" + std::to_string(s);
    const std::string vid = "v" + std::to_string(s);
    writeWav(testutil::noise(4.0, 16000, rng()), root + "/" + pid + ".wav");
    writeWav(testutil::noise(4.5, 16000, rng()), root + "/" + vid + ".wav");
    writeMidi(noteList(std::move(piano_notes)), root + "/" + pid + ".mid");
    writeMidi(noteList(std::move(violin_notes)), root + "/" + vid + ".mid");
    nlohmann::json pe, vev;
    pe["source_id"] = pid;
    pe["instrument"] = "piano";
    pe["audio_path"] = pid + ".wav";
    pe["midi_path"] = pid + ".mid";
    piano_entries.push_back(pe);
    vev["source_id"] = vid;
    vev["instrument"] = "violin";
    vev["audio_path"] = vid + ".wav";
    vev["midi_path"] = vid + ".mid";
    violin_entries.push_back(vev);
  }
  std::ofstream(root + "/pc.json") << piano_entries.dump();
  std::ofstream(root + "/vc.json") << violin_entries.dump();

  Config cfg = Config::fromText(
      "piano_catalog = " + root + "/pc.json\n" +
      "violin_catalog = " + root + "/vc.json\n" +
      "pairs = 6\nseed = 2\npiano_excerpt_s = 4.0\nviolin_extra_s = 0.5\n"
      "strategies = random onset\n");
  const std::vector<OverlapRow> rows = runOverlapStats(loadPipelineConfig(cfg));
  EXPECT_EQ(rows.size(), 12u);  // pairs x strategies

  for (const OverlapRow& row : rows) {
    if (row.strategy == MixStrategy::kOnset) {
      EXPECT_EQ(row.shift, 5);
      EXPECT_EQ(row.overlap, row.piano_onsets);
    }
  }
  const std::string csv = overlapCsv(rows);
  EXPECT_NE(csv.find("pair_id,strategy,shift,overlap"), std::string::npos);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), rows.size() + 1);
}

TEST(OverlapStats, DenserOnsetsRaiseMeanOverlap) {
  // Two corpora differing only in onset density; denser onsets must produce a
  // strictly larger mean best-shift overlap.
  TempDir dir("overlap_density");
  const std::string root = dir.path().string();
  std::mt19937_64 rng(77);

  const auto build = [&](const std::string& tag, double gap_s) {
    nlohmann::json pc = nlohmann::json::array();
    nlohmann::json vc = nlohmann::json::array();
    for (int s = 0; s < 2; ++s) {
      const auto make = [&](const std::string& id, const std::string& instrument, double dur) {
        std::vector<NoteEvent> notes;
        double t = 0.3;
        while (t < dur - 0.4) {
          notes.push_back(note(60, t, t + 0.1));
          t += gap_s + 0.05 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        }
        writeWav(testutil::noise(dur, 16000, rng()), root + "/" + id + ".wav");
        writeMidi(noteList(std::move(notes)), root + "/" + id + ".mid");
        nlohmann::json e;
        e["source_id"] = id;
        e["instrument"] = instrument;
        e["audio_path"] = id + ".wav";
        e["midi_path"] = id + ".mid";
        return e;
      };
      pc.push_back(make(tag + "p" + std::to_string(s), "piano", 6.0));
      vc.push_back(make(tag + "v" + std::to_string(s), "violin", 6.5));
    }
    std::ofstream(root + "/" + tag + "_pc.json") << pc.dump();
    std::ofstream(root + "/" + tag + "_vc.json") << vc.dump();
    Config cfg = Config::fromText(
        "piano_catalog = " + root + "/" + tag + "_pc.json\n" +
        "violin_catalog = " + root + "/" + tag + "_vc.json\n" +
        "pairs = 10\nseed = 6\npiano_excerpt_s = 5.0\nviolin_extra_s = 0.5\n"
        "strategies = onset\n");
    const std::vector<OverlapRow> rows = runOverlapStats(loadPipelineConfig(cfg));
    double mean = 0.0;
    for (const OverlapRow& row : rows) mean += row.overlap;
    return mean / static_cast<double>(rows.size());
  };

  const double sparse_mean = build("sparse", 0.60);
  const double dense_mean = build("dense", 0.15);  // ~4x the onset rate
  EXPECT_GT(dense_mean, sparse_mean);
}

TEST(Analyze, KeyAndOnsetsFromScaleClip) {
  TempDir dir("analyze");
  // C major scale tones layered with clicks at known positions.
  AudioClip clip = testutil::silence(3.0, 16000);
  const double freqs[] = {261.63, 293.66, 329.63, 349.23, 392.0, 440.0, 493.88};
  for (double f : freqs) {
    const AudioClip tone = testutil::sine(f, 3.0, 16000, 0.08);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] += tone.samples[i];
  }
  clip.samples[16000] += 0.8;  // click at 1.0 s
  const std::string path = dir.file("scale.wav");
  writeWav(clip, path);

  const nlohmann::json j = runAnalyze(path, OnsetPickParams{});
  EXPECT_EQ(j["estimated_key"], "C");
  EXPECT_EQ(j["sample_rate_hz"], 16000);
  ASSERT_GE(j["onset_frames"].size(), 1u);
}

TEST(ManifestIo, RecipeRoundTripIncludingFallbackStrategy) {
  MixRecipe recipe;
  recipe.strategy = MixStrategy::kKeyOnset;
  recipe.key_fallback = true;
  recipe.piano_span = {"p0", 1.25, 2.0};
  recipe.violin_span = {"v3", 0.5, 2.5};
  recipe.rms_ratio = 0.7321;
  recipe.violin_gain = 1.875;
  recipe.shift_frames = 9;
  recipe.post_gain = 0.91;
  recipe.piano_key = parseKeyName("E");
  recipe.violin_key = parseKeyName("Am");
  recipe.overlap_count = 14;
  recipe.seed = 0xdeadbeef;
  recipe.mix_rate_hz = 16000;

  const nlohmann::json j = recipeToJson(recipe);
  EXPECT_EQ(j["strategy"], "key_onset_with_fallback");
  const MixRecipe back = recipeFromJson(j);
  EXPECT_EQ(back.strategy, MixStrategy::kKeyOnset);
  EXPECT_TRUE(back.key_fallback);
  EXPECT_EQ(back.piano_span.source_id, "p0");
  EXPECT_EQ(back.rms_ratio, recipe.rms_ratio);
  EXPECT_EQ(back.violin_gain, recipe.violin_gain);
  EXPECT_EQ(back.shift_frames, 9);
  EXPECT_EQ(*back.overlap_count, 14);
  EXPECT_EQ(keyName(*back.violin_key), "Am");
  EXPECT_EQ(back.seed, 0xdeadbeefULL);
}

}  // namespace
}  // namespace vpmix
