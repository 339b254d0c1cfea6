// SPDX-License-Identifier: Apache-2.0
//
// Batch captioning, ablation grids and one-axis hyperparameter sweeps.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zsac/backends.h"
#include "zsac/decoder.h"
#include "zsac/keywords.h"
#include "zsac/metrics.h"
#include "zsac/prompt.h"

namespace zsac {

struct ClipEntry {
  std::string clip_id;
  std::string audio;  // fixture clip id, or the true description in toy mode
  std::vector<std::string> refs;
};

struct Manifest {
  std::vector<ClipEntry> clips;

  // Unique clip ids; with require_refs, every clip has a non-empty reference.
  void validate(bool require_refs) const;
  std::vector<ReferenceSet> reference_sets() const;
};

// JSON lines: {"clip_id": ..., "audio": ..., "refs": [...]}; "audio"
// defaults to the clip id.
Manifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);

// {"clip_id": ["caption", ...]}; candidate files may use plain strings.
std::vector<ReferenceSet> load_references(const std::string& path);
CandidateMap load_candidates(const std::string& path);
void write_candidates(const std::string& path, const CandidateMap& candidates);

struct Backends {
  std::shared_ptr<const AudioTextMatcher> matcher;
  std::shared_ptr<const LanguageModel> lm;
  std::string name;  // reported in the "model" column
};

enum class DecodeMode { kGuided, kGreedy };

struct BatchOptions {
  std::size_t jobs = 1;
  DecodeMode mode = DecodeMode::kGuided;
};

struct BatchResult {
  CandidateMap captions;
  std::map<std::string, CaptionResult> results;
  std::map<std::string, std::string> failures;  // clip_id -> message
  MetricReport report;
};

// Decodes every clip and scores the captions. A clip that throws is
// recorded in failures and scored as an empty caption. Throws
// EmptyInputError on an empty manifest.
BatchResult run_batch(const Manifest& manifest, const Backends& backends, const KeywordList& keywords,
                      const PromptTemplate& tmpl, const DecodeConfig& cfg, std::size_t l,
                      const BatchOptions& options = {});

struct KeywordVariant {
  std::string name;                 // "None" for no keyword list
  std::optional<KeywordList> list;  // nullopt: keyword-free prompt
};

struct AblationRow {
  std::string model;
  std::string keyword_list;
  bool magic = false;
  std::string decoding;  // "magic", "no-magic" or "greedy"
  MetricReport report;
};

struct AblationOptions {
  std::size_t jobs = 1;
  // Adds one audio-agnostic decode_greedy row after the grid.
  bool include_greedy_baseline = false;
};

// One row per (variant, MAGIC on/off), in variant order, MAGIC on first.
// MAGIC off means w_magic = 0 with the same keywords.
std::vector<AblationRow> run_ablation(const Manifest& manifest, const Backends& backends,
                                      const std::vector<KeywordVariant>& variants,
                                      const PromptTemplate& tmpl, const DecodeConfig& cfg,
                                      std::size_t l, const AblationOptions& options = {});

enum class SweepAxis { kWConfidence, kWDegeneration, kWMagic, kTau, kL, kK, kKeywordList };

std::string axis_name(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kL;
  std::vector<std::string> values;
  DecodeConfig fixed;
  std::size_t l = 1;
  std::string keyword_list;  // catalog entry used by every non keyword_list row
};

using KeywordCatalog = std::map<std::string, std::optional<KeywordList>>;

struct SweepRow {
  std::string axis;
  std::string value;
  MetricReport report;
  bool best = false;
};

// Values are checked up front (InvalidArgumentError) before any decode.
std::vector<SweepRow> run_sweep(const Manifest& manifest, const Backends& backends,
                                const KeywordCatalog& catalog, const PromptTemplate& tmpl,
                                const SweepSpec& spec, std::size_t jobs = 1);

// CSV with a fixed header per table type; reals printed with 17 significant
// digits so a reload reproduces them exactly.
std::string ablation_to_csv(const std::vector<AblationRow>& rows);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::string& text);

std::vector<AblationRow> ablation_from_csv(const std::string& text);
std::vector<SweepRow> sweep_from_csv(const std::string& text);

std::string config_to_json(const DecodeConfig& cfg, const PromptTemplate& tmpl, int indent = -1);

}  // namespace zsac
