// SPDX-License-Identifier: Apache-2.0

#include "zsac/decoder.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json.hpp"
#include "zsac/text.h"

namespace zsac {

namespace {

void check_weight(double w, const char* name) {
  if (!std::isfinite(w) || w < 0.0) {
    throw InvalidArgumentError(std::string("decode config: ") + name + " must be finite and >= 0");
  }
}

using Scorer = std::function<std::vector<ScoredCandidate>(const DecodeState&,
                                                          std::span<const TokenProb>)>;

std::vector<Token> concat(std::span<const Token> a, std::span<const Token> b, const Token* c) {
  std::vector<Token> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  if (c) out.push_back(*c);
  return out;
}

CaptionResult run_search(const LanguageModel& lm, const DecodeConfig& cfg, std::string prompt,
                         const Scorer& scorer) {
  CaptionResult result;
  result.prompt = std::move(prompt);
  DecodeState& state = result.trace;
  state.prompt_tokens = lm.encode(result.prompt);

  while (state.generated.size() < cfg.max_tokens) {
    std::vector<Token> prefix = concat(state.prompt_tokens, state.generated, nullptr);
    std::vector<TokenProb> candidates = lm.top_k_next(prefix, cfg.k);
    std::vector<ScoredCandidate> scored = scorer(state, candidates);
    const std::size_t pick = select_candidate(scored);
    const Token chosen = scored[pick].token;
    state.step_traces.push_back(StepTrace{state.generated.size(), std::move(scored), pick});
    state.generated.push_back(chosen);
    if (is_end_token(chosen, lm, cfg)) {
      state.finished = true;
      if (state.generated.size() == 1) {
        warn("first generated token is an end token (\"" + chosen.surface + "\")");
      }
      break;
    }
  }

  auto end = std::find_if(state.generated.begin(), state.generated.end(),
                          [&](const Token& t) { return is_end_token(t, lm, cfg); });
  if (end != state.generated.end()) ++end;
  result.tokens.assign(state.generated.begin(), end);
  result.text = trim(truncate_at_end_token(lm.decode(result.tokens), cfg.end_tokens));
  return result;
}

}  // namespace

void DecodeConfig::validate() const {
  if (k == 0) throw InvalidArgumentError("decode config: k must be >= 1");
  if (max_tokens == 0) throw InvalidArgumentError("decode config: max_tokens must be >= 1");
  check_weight(w_confidence, "w_confidence");
  check_weight(w_degeneration, "w_degeneration");
  check_weight(w_magic, "w_magic");
  check_weight(tau, "tau");
  check_weight(w_end, "w_end");
}

bool is_end_token(const Token& token, const LanguageModel& lm, const DecodeConfig& cfg) {
  return cfg.end_tokens.contains(token.surface) || lm.is_end_of_sequence(token);
}

std::vector<ScoredCandidate> score_candidates(const DecodeState& state,
                                              std::span<const TokenProb> candidates,
                                              const Embedding& audio, const AudioTextMatcher& matcher,
                                              const LanguageModel& lm, const DecodeConfig& cfg) {
  if (candidates.empty()) throw EmptyInputError("score_candidates: no candidates");

  double mass = 0.0;
  for (const auto& c : candidates) mass += c.probability;

  std::vector<Embedding> previous;
  previous.reserve(state.generated.size());
  for (const Token& p : state.generated) previous.push_back(matcher.embed_text(p.surface));

  std::vector<ScoredCandidate> out(candidates.size());
  std::vector<double> magic_logits(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const TokenProb& c = candidates[i];
    ScoredCandidate& s = out[i];
    s.token = c.token;
    s.probability = c.probability;
    s.confidence = c.probability / mass;

    const bool need_token_embedding = !previous.empty();
    if (need_token_embedding) {
      const Embedding token_emb = matcher.embed_text(c.token.surface);
      double worst = -1.0;
      for (const Embedding& p : previous) worst = std::max(worst, cosine_similarity(token_emb, p));
      s.degeneration = worst;
      if (cfg.token_pair_magic) {
        magic_logits[i] = cfg.tau * cosine_similarity(token_emb, previous.back());
      }
    }
    if (!cfg.token_pair_magic) {
      std::vector<Token> seq = cfg.magic_includes_prompt
                                   ? concat(state.prompt_tokens, state.generated, &c.token)
                                   : concat({}, state.generated, &c.token);
      magic_logits[i] = cfg.tau * cosine_similarity(matcher.embed_text(lm.decode(seq)), audio);
    }
  }

  const std::vector<double> magic = softmax(magic_logits);
  const double penalty = end_penalty(state.generated.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    ScoredCandidate& s = out[i];
    s.magic = magic[i];
    s.final_score = cfg.w_confidence * s.confidence - cfg.w_degeneration * s.degeneration +
                    cfg.w_magic * s.magic;
    if (is_end_token(s.token, lm, cfg)) {
      s.end_penalty = cfg.w_end * penalty;
      s.final_score -= s.end_penalty;
    }
  }
  return out;
}

std::size_t select_candidate(std::span<const ScoredCandidate> scored) {
  if (scored.empty()) throw EmptyInputError("select_candidate: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    const auto& a = scored[i];
    const auto& b = scored[best];
    if (a.final_score > b.final_score ||
        (a.final_score == b.final_score && a.token.id < b.token.id)) {
      best = i;
    }
  }
  return best;
}

CaptionResult decode(std::string_view clip_ref, const AudioTextMatcher& matcher,
                     const LanguageModel& lm, const KeywordList& keywords,
                     const PromptTemplate& tmpl, const DecodeConfig& cfg, std::size_t l) {
  cfg.validate();
  const Embedding audio = matcher.embed_audio(clip_ref);
  KeywordSelectOptions options;
  options.embed_template = cfg.keyword_embed_template;
  std::vector<KeywordMatch> matches = select_keywords(matcher, audio, keywords, l, options);

  Scorer scorer = [&](const DecodeState& state, std::span<const TokenProb> candidates) {
    return score_candidates(state, candidates, audio, matcher, lm, cfg);
  };
  CaptionResult result = run_search(lm, cfg, build_prompt(tmpl, matches), scorer);
  result.keywords_used = std::move(matches);
  return result;
}

CaptionResult decode_greedy(const LanguageModel& lm, const PromptTemplate& tmpl,
                            const DecodeConfig& cfg) {
  DecodeConfig greedy = cfg;
  greedy.w_degeneration = 0.0;
  greedy.w_magic = 0.0;
  greedy.w_end = 0.0;
  greedy.validate();

  // No matcher: the auxiliary terms are recorded as zero.
  Scorer scorer = [&](const DecodeState&, std::span<const TokenProb> candidates) {
    if (candidates.empty()) throw EmptyInputError("decode_greedy: no candidates");
    double mass = 0.0;
    for (const auto& c : candidates) mass += c.probability;
    std::vector<ScoredCandidate> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
      ScoredCandidate s;
      s.token = c.token;
      s.probability = c.probability;
      s.confidence = c.probability / mass;
      s.final_score = greedy.w_confidence * s.confidence;
      out.push_back(std::move(s));
    }
    return out;
  };
  return run_search(lm, greedy, build_prompt(tmpl, {}), scorer);
}

std::string truncate_at_end_token(std::string_view text, const std::set<std::string>& end_tokens) {
  std::size_t cut = text.size();
  for (const std::string& e : end_tokens) {
    if (e.empty()) continue;
    if (auto pos = text.find(e); pos != std::string_view::npos) cut = std::min(cut, pos + e.size());
  }
  return std::string(text.substr(0, cut));
}

std::string caption_to_json(const CaptionResult& result, int indent) {
  using nlohmann::json;
  auto tokens_json = [](std::span<const Token> tokens) {
    json arr = json::array();
    for (const auto& t : tokens) arr.push_back({{"id", t.id}, {"surface", t.surface}});
    return arr;
  };
  json keywords = json::array();
  for (const auto& m : result.keywords_used) {
    keywords.push_back({{"keyword", m.keyword}, {"similarity", m.similarity}, {"rank", m.rank}});
  }
  json steps = json::array();
  for (const auto& st : result.trace.step_traces) {
    json cands = json::array();
    for (const auto& c : st.candidates) {
      cands.push_back({{"id", c.token.id},
                       {"surface", c.token.surface},
                       {"probability", c.probability},
                       {"confidence", c.confidence},
                       {"degeneration", c.degeneration},
                       {"magic", c.magic},
                       {"end_penalty", c.end_penalty},
                       {"final", c.final_score}});
    }
    steps.push_back({{"step", st.step}, {"selected", st.selected}, {"candidates", std::move(cands)}});
  }
  json doc = {{"text", result.text},
              {"prompt", result.prompt},
              {"keywords", std::move(keywords)},
              {"tokens", tokens_json(result.tokens)},
              {"prompt_tokens", tokens_json(result.trace.prompt_tokens)},
              {"generated", tokens_json(result.trace.generated)},
              {"finished", result.trace.finished},
              {"steps", std::move(steps)}};
  return doc.dump(indent);
}

}  // namespace zsac
