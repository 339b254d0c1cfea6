// SPDX-License-Identifier: Apache-2.0
//
// Audio-guided MAGIC search. Each step takes the LM's top-k candidates and
// scores them as
//
//   final = w_confidence * confidence
//         - w_degeneration * degeneration
//         + w_magic * magic
//         - [end token] * w_end / (1 + generated)
//
// where confidence is the LM probability renormalized over the k
// candidates, degeneration is the largest cosine similarity between the
// candidate's text embedding and any already generated token, and magic
// is softmax_k(tau * cos(text(generated + candidate), audio)). The argmax
// (ties to the lowest token id) is appended until an end token is chosen
// or max_tokens is reached.

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsac/backends.h"
#include "zsac/core.h"
#include "zsac/keywords.h"
#include "zsac/prompt.h"

namespace zsac {

struct DecodeConfig {
  std::size_t k = 45;
  double w_confidence = 0.5;
  double w_degeneration = 0.0;
  double w_magic = 1.0;
  double tau = 10.0;
  double w_end = 1.0;
  std::size_t max_tokens = 16;
  std::set<std::string> end_tokens = {".", "!", "?"};
  // Score the prompt together with the generated text against the audio.
  bool magic_includes_prompt = false;
  // Literal token-pair form: tau * cos(candidate, last generated token).
  bool token_pair_magic = false;
  std::optional<std::string> keyword_embed_template;

  // Throws InvalidArgumentError on k == 0, max_tokens == 0, or a negative
  // or non-finite weight.
  void validate() const;
};

struct StepTrace {
  std::size_t step = 0;
  std::vector<ScoredCandidate> candidates;  // in LM rank order
  std::size_t selected = 0;                 // index into candidates
};

struct DecodeState {
  std::vector<Token> prompt_tokens;
  std::vector<Token> generated;
  std::vector<StepTrace> step_traces;  // one per generated token
  bool finished = false;               // stopped on an end token
};

struct CaptionResult {
  std::string text;
  std::vector<Token> tokens;  // generated tokens after truncation
  DecodeState trace;
  std::vector<KeywordMatch> keywords_used;
  std::string prompt;
};

bool is_end_token(const Token& token, const LanguageModel& lm, const DecodeConfig& cfg);

// Scores one step's candidates. Throws EmptyInputError on no candidates.
std::vector<ScoredCandidate> score_candidates(const DecodeState& state,
                                              std::span<const TokenProb> candidates,
                                              const Embedding& audio, const AudioTextMatcher& matcher,
                                              const LanguageModel& lm, const DecodeConfig& cfg);

// Index of the highest final score; ties go to the lowest token id.
std::size_t select_candidate(std::span<const ScoredCandidate> scored);

// Keyword selection, prompt construction and guided search for one clip.
CaptionResult decode(std::string_view clip_ref, const AudioTextMatcher& matcher,
                     const LanguageModel& lm, const KeywordList& keywords,
                     const PromptTemplate& tmpl, const DecodeConfig& cfg, std::size_t l);

// Audio-agnostic baseline: base prompt only, ranking by LM confidence.
// The same loop as decode() with w_degeneration = w_magic = w_end = 0;
// output does not depend on the clip.
CaptionResult decode_greedy(const LanguageModel& lm, const PromptTemplate& tmpl,
                            const DecodeConfig& cfg);

// Cuts text right after the first end token occurrence.
std::string truncate_at_end_token(std::string_view text, const std::set<std::string>& end_tokens);

// Structured record including the full step traces.
std::string caption_to_json(const CaptionResult& result, int indent = -1);

}  // namespace zsac
