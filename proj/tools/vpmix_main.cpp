// vpmix: generate violin-piano training mixtures from solo recordings and
// evaluate piano transcriptions.
//
// Subcommands: mix, replay, eval, overlap-stats, split, analyze.
// Exit codes: 0 success, 1 usage/config error, 2 majority-failure batch.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vpmix/config.hpp"
#include "vpmix/errors.hpp"
#include "vpmix/pipeline.hpp"
#include "vpmix/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMajorityFailure = 2;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::int64_t seed = -1;  // -1: take the config's seed
  int jobs = 0;            // 0: take the config's jobs
};

vpmix::PipelineConfig loadWithOverrides(const CommonFlags& flags) {
  vpmix::Config cfg = flags.config_path.empty() ? vpmix::Config()
                                                : vpmix::Config::fromFile(flags.config_path);
  if (flags.seed >= 0) cfg.set("seed", std::to_string(flags.seed));
  if (!flags.out.empty()) cfg.set("out_dir", flags.out);
  if (flags.jobs > 0) cfg.set("jobs", std::to_string(flags.jobs));
  return vpmix::loadPipelineConfig(cfg);
}

void writeTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vpmix::IoError("cannot open file for writing: " + path);
  out << text;
}

int reportBatch(const vpmix::MixBatchSummary& summary, const char* verb) {
  for (const std::string& failure : summary.failures) {
    std::cerr << "warning: " << failure << "\n";
  }
  std::cout << verb << " " << summary.generated << "/" << summary.requested << " mixtures";
  if (summary.failed > 0) std::cout << " (" << summary.failed << " failed)";
  std::cout << "; manifest: " << summary.manifest_path << "\n";
  return summary.failed * 2 > summary.requested ? kExitMajorityFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"violin-piano ensemble mixture generation and transcription evaluation"};
  app.set_version_flag("--version", vpmix::kVersion);
  app.require_subcommand(1);

  CommonFlags flags;

  auto* mix = app.add_subcommand("mix", "generate mixtures from a config and catalogs");
  mix->add_option("--config", flags.config_path, "config file")->required();
  mix->add_option("--seed", flags.seed, "override the config seed");
  mix->add_option("--out", flags.out, "override the output directory");
  mix->add_option("--jobs", flags.jobs, "worker threads");

  auto* replay = app.add_subcommand("replay", "regenerate mixtures from a manifest, sample-exact");
  std::string manifest_path;
  replay->add_option("--manifest", manifest_path, "manifest.jsonl to replay")->required();
  replay->add_option("--out", flags.out, "output directory")->required();
  replay->add_option("--jobs", flags.jobs, "worker threads");

  auto* eval = app.add_subcommand("eval", "score estimated MIDI against reference MIDI");
  std::string ref_dir, est_dir;
  eval->add_option("--ref", ref_dir, "reference MIDI directory")->required();
  eval->add_option("--est", est_dir, "estimated MIDI directory")->required();
  eval->add_option("--config", flags.config_path, "config file (tolerances)");
  eval->add_option("--out", flags.out, "output prefix for <prefix>.json and <prefix>.txt");

  auto* overlap = app.add_subcommand("overlap-stats", "onset-overlap statistics per strategy");
  overlap->add_option("--config", flags.config_path, "config file")->required();
  overlap->add_option("--seed", flags.seed, "override the config seed");
  overlap->add_option("--out", flags.out, "output CSV path")->required();

  auto* split = app.add_subcommand("split", "composer-balanced piece-level dataset split");
  std::string split_catalog;
  split->add_option("--config", flags.config_path, "config file (ratios, seed, catalog)");
  split->add_option("--catalog", split_catalog, "catalog to split (overrides config)");
  split->add_option("--seed", flags.seed, "override the config seed");
  split->add_option("--out", flags.out, "output JSON path");

  auto* analyze = app.add_subcommand("analyze", "per-file key and onset dump");
  std::string audio_path;
  analyze->add_option("audio", audio_path, "WAV file to analyze")->required();
  analyze->add_option("--config", flags.config_path, "config file (onset thresholds)");
  analyze->add_option("--out", flags.out, "output JSON path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mix->parsed()) {
      return reportBatch(vpmix::runMix(loadWithOverrides(flags)), "generated");
    }

    if (replay->parsed()) {
      const int jobs = flags.jobs > 0 ? flags.jobs : 1;
      return reportBatch(vpmix::runReplay(manifest_path, flags.out, jobs), "replayed");
    }

    if (eval->parsed()) {
      const vpmix::PipelineConfig cfg = loadWithOverrides(CommonFlags{flags.config_path});
      const vpmix::EvalSummary summary =
          vpmix::runEval(ref_dir, est_dir, cfg.match, cfg.eval_velocity);
      for (const std::string& unpaired : summary.unpaired) {
        std::cerr << "warning: unpaired " << unpaired << "\n";
      }
      const std::string table = vpmix::evalTable(summary);
      if (flags.out.empty()) {
        std::cout << table;
      } else {
        writeTextFile(flags.out + ".json", vpmix::evalToJson(summary).dump(2) + "\n");
        writeTextFile(flags.out + ".txt", table);
        std::cout << "wrote " << flags.out << ".json and " << flags.out << ".txt\n";
      }
      return kExitOk;
    }

    if (overlap->parsed()) {
      const vpmix::PipelineConfig cfg = loadWithOverrides(CommonFlags{
          flags.config_path, /*out=*/"", flags.seed, /*jobs=*/0});
      const auto rows = vpmix::runOverlapStats(cfg);
      writeTextFile(flags.out, vpmix::overlapCsv(rows));
      std::cout << "wrote " << rows.size() << " rows to " << flags.out << "\n";
      return kExitOk;
    }

    if (split->parsed()) {
      const vpmix::PipelineConfig cfg = loadWithOverrides(CommonFlags{
          flags.config_path, /*out=*/"", flags.seed, /*jobs=*/0});
      const std::string catalog =
          !split_catalog.empty() ? split_catalog
                                 : (!cfg.piano_catalog_path.empty() ? cfg.piano_catalog_path
                                                                    : cfg.violin_catalog_path);
      if (catalog.empty()) {
        std::cerr << "error: split needs --catalog or a config with a catalog path\n";
        return kExitUsage;
      }
      const vpmix::SplitSpec spec = vpmix::runSplit(catalog, cfg.split_ratios, cfg.seed);
      const std::string text = vpmix::splitToJson(spec).dump(2) + "\n";
      if (flags.out.empty()) {
        std::cout << text;
      } else {
        writeTextFile(flags.out, text);
      }
      return kExitOk;
    }

    if (analyze->parsed()) {
      const vpmix::PipelineConfig cfg = loadWithOverrides(CommonFlags{flags.config_path});
      const std::string text = vpmix::runAnalyze(audio_path, cfg.onset).dump(2) + "\n";
      if (flags.out.empty()) {
        std::cout << text;
      } else {
        writeTextFile(flags.out, text);
      }
      return kExitOk;
    }
  } catch (const vpmix::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
