// SPDX-License-Identifier: Apache-2.0
//
// Caption metrics: corpus BLEU-n, a dependency-free METEOR variant
// (exact + suffix-stem matching, no synonym stage), CIDEr, and the NLG
// mean. All metrics share one tokenizer.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zsac/core.h"

namespace zsac {

class MissingReferenceError : public Error { using Error::Error; };
class InsufficientCorpusError : public Error { using Error::Error; };

struct ReferenceSet {
  std::string clip_id;
  std::vector<std::string> references;
};

using CandidateMap = std::map<std::string, std::string>;  // clip_id -> caption
using ReferenceMap = std::map<std::string, ReferenceSet>;

// Lowercase, punctuation stripped (apostrophes and inner hyphens kept),
// whitespace split.
std::vector<std::string> metric_tokenize(std::string_view text);

// Builds the lookup and checks every set has a non-empty reference.
ReferenceMap index_references(const std::vector<ReferenceSet>& refs);

struct BleuOptions {
  // 0 disables smoothing: any zero precision gives BLEU 0. Otherwise a
  // zero match count is replaced by epsilon.
  double epsilon = 0.0;
};

double bleu_n(const CandidateMap& candidates, const ReferenceMap& refs, int n,
              const BleuOptions& options = {});

// Sentence-level pieces exposed for per-clip reporting and tests.
double meteor_sentence(const std::string& candidate, const std::string& reference);
std::string meteor_stem(const std::string& word);

double meteor(const CandidateMap& candidates, const ReferenceMap& refs,
              std::map<std::string, double>* per_clip = nullptr);

// Requires at least two clips (document frequencies need a corpus).
double cider(const CandidateMap& candidates, const ReferenceMap& refs,
             std::map<std::string, double>* per_clip = nullptr);

struct NlgMean {
  double value = 0.0;
  std::vector<std::string> included;
};

// Arithmetic mean of the metrics that are present.
NlgMean nlg_mean(const std::map<std::string, std::optional<double>>& metrics);
double nlg_mean(const std::vector<double>& values);

struct ClipScores {
  double bleu2 = 0.0;
  double bleu3 = 0.0;
  double meteor = 0.0;
  std::optional<double> cider;
};

struct MetricReport {
  double bleu2 = 0.0;
  double bleu3 = 0.0;
  double meteor = 0.0;
  std::optional<double> cider;  // absent for single-clip corpora
  double nlg_mean = 0.0;
  std::vector<std::string> included;
  std::map<std::string, ClipScores> per_clip;
};

// Throws MissingReferenceError when a candidate has no references and
// EmptyInputError on an empty candidate set.
MetricReport evaluate(const CandidateMap& candidates, const ReferenceMap& refs);

std::string report_to_json(const MetricReport& report, int indent = -1);
std::string report_to_table(const MetricReport& report);

}  // namespace zsac
