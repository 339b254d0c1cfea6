// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "oracles.h"
#include "zsac/decoder.h"
#include "zsac/text.h"
#include "zsac/toy_world.h"

using namespace zsac;

namespace {

struct QuietWarnings {
  std::vector<std::string> seen;
  QuietWarnings() {
    set_warning_sink([this](const std::string& m) { seen.push_back(m); });
  }
  ~QuietWarnings() { set_warning_sink(nullptr); }
};

DecodeState state_with(std::vector<Token> generated) {
  DecodeState s;
  s.generated = std::move(generated);
  return s;
}

}  // namespace

TEST_CASE("config validation") {
  DecodeConfig c;
  CHECK_NOTHROW(c.validate());
  c.k = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgumentError);
  c = DecodeConfig{};
  c.w_magic = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgumentError);
  c = DecodeConfig{};
  c.tau = std::nan("");
  CHECK_THROWS_AS(c.validate(), InvalidArgumentError);
  c = DecodeConfig{};
  c.max_tokens = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgumentError);
}

TEST_CASE("k=3 step equals hand evaluation") {
  NgramLanguageModel lm({"dog barks .", "dog runs", "cat barks"}, 2);
  ToyMatcher m(4, 32);
  const Embedding audio = m.embed_text("dog barks");
  std::vector<Token> generated = {Token{*lm.lookup("dog"), "dog"}};
  auto cands = lm.top_k_next(generated, 3);
  REQUIRE(cands.size() == 3);
  DecodeConfig cfg;
  cfg.k = 3;
  cfg.w_confidence = 0.7;
  cfg.w_degeneration = 0.3;
  cfg.w_magic = 1.2;
  cfg.tau = 10;
  cfg.w_end = 0.8;
  auto got = score_candidates(state_with(generated), cands, audio, m, lm, cfg);

  double mass = cands[0].probability + cands[1].probability + cands[2].probability;
  std::vector<double> logit;
  for (const auto& c : cands) {
    logit.push_back(10 * oracle::dot_cos(m.embed_text(lm.decode(std::vector<Token>{generated[0], c.token})), audio));
  }
  const double z = std::exp(logit[0]) + std::exp(logit[1]) + std::exp(logit[2]);
  for (std::size_t i = 0; i < 3; ++i) {
    const double conf = cands[i].probability / mass;
    const double deg = oracle::dot_cos(m.embed_text(cands[i].token.surface), m.embed_text("dog"));
    const double magic = std::exp(logit[i]) / z;
    double expect = 0.7 * conf - 0.3 * deg + 1.2 * magic;
    if (cands[i].token.surface == "." || cands[i].token.id == NgramLanguageModel::kEos) expect -= 0.8 / 2.0;
    CHECK(std::abs(got[i].final_score - expect) <= 1e-12);
    CHECK(std::abs(got[i].confidence - conf) <= 1e-12);
    CHECK(std::abs(got[i].magic - magic) <= 1e-12);
  }
}

TEST_CASE("zero auxiliary weights rank by probability") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto in = oracle::random_instance(seed);
    in.cfg.w_degeneration = in.cfg.w_magic = in.cfg.w_end = 0;
    in.cfg.w_confidence = 1;
    auto prefix = in.lm->encode(in.clip);
    auto cands = in.lm->top_k_next(prefix, in.cfg.k);
    auto scored = score_candidates(state_with({}), cands, in.matcher->embed_audio(in.clip), *in.matcher, *in.lm, in.cfg);
    CHECK(select_candidate(scored) == 0);
  }
}

TEST_CASE("tau zero gives uniform magic") {
  auto in = oracle::random_instance(3);
  in.cfg.tau = 0;
  in.cfg.k = 5;
  auto cands = in.lm->top_k_next({}, in.cfg.k);
  auto scored = score_candidates(state_with({}), cands, in.matcher->embed_audio(in.clip), *in.matcher, *in.lm, in.cfg);
  for (const auto& s : scored) CHECK(s.magic == doctest::Approx(1.0 / static_cast<double>(scored.size())));
}

TEST_CASE("score_candidates rejects empty candidates") {
  auto in = oracle::random_instance(1);
  CHECK_THROWS_AS(score_candidates(state_with({}), {}, in.matcher->embed_audio("x"), *in.matcher, *in.lm, in.cfg),
                  EmptyInputError);
  CHECK_THROWS_AS(select_candidate({}), EmptyInputError);
}

TEST_CASE("select_candidate breaks ties by lowest id") {
  std::vector<ScoredCandidate> s(3);
  s[0].token = {9, "a"};
  s[1].token = {4, "b"};
  s[2].token = {6, "c"};
  for (auto& c : s) c.final_score = 0.5;
  CHECK(select_candidate(s) == 1);
}

TEST_CASE("step oracle over random decodes") {
  QuietWarnings quiet;
  std::size_t steps = 0;
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    auto in = oracle::random_instance(seed);
    const std::size_t l = std::min<std::size_t>(in.keywords.size(), seed % 3);
    auto res = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, in.cfg, l);
    const Embedding audio = in.matcher->embed_audio(in.clip);
    std::vector<Token> generated;
    for (const auto& st : res.trace.step_traces) {
      std::vector<Token> prefix = res.trace.prompt_tokens;
      prefix.insert(prefix.end(), generated.begin(), generated.end());
      auto cands = in.lm->top_k_next(prefix, in.cfg.k);
      auto expect = oracle::step_scores(generated, cands, audio, *in.matcher, *in.lm, in.cfg);
      REQUIRE(expect.size() == st.candidates.size());
      for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(st.candidates[i].token == expect[i].token);
        CHECK(std::abs(st.candidates[i].final_score - expect[i].final_score) <= 1e-12);
      }
      CHECK(st.selected == oracle::argmax(expect));
      generated.push_back(st.candidates[st.selected].token);
      ++steps;
    }
  }
  CHECK(steps > 100);
}

TEST_CASE("decode_greedy equals zero-weight decode") {
  QuietWarnings quiet;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto in = oracle::random_instance(seed);
    DecodeConfig zero = in.cfg;
    zero.w_degeneration = zero.w_magic = zero.w_end = 0;
    auto a = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, zero, 0);
    auto b = decode_greedy(*in.lm, PromptTemplate{}, in.cfg);
    CHECK(a.tokens == b.tokens);
    CHECK(a.text == b.text);
  }
}

TEST_CASE("decode_greedy follows the greedy path oracle") {
  QuietWarnings quiet;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto in = oracle::random_instance(seed);
    DecodeConfig cfg = in.cfg;
    cfg.k = 1000;
    cfg.max_tokens = 10;
    auto r = decode_greedy(*in.lm, PromptTemplate{}, cfg);
    auto walk = oracle::greedy_walk(*in.lm, in.lm->encode(PromptTemplate{}.base_prompt), cfg.max_tokens, cfg.end_tokens);
    std::vector<std::string> got;
    for (const auto& t : r.trace.generated) got.push_back(t.surface);
    CHECK(got == walk);
    CHECK(!r.trace.generated.empty());
  }
}

TEST_CASE("perfectly aligned description is recovered") {
  // "the dog barks loudly" is the most probable continuation of "of".
  NgramLanguageModel lm({"this is a sound of the dog barks loudly .", "the cat sleeps", "a dog runs"}, 2);
  ToyMatcher m(11, 64);
  m.register_clip("c", "the dog barks loudly");
  DecodeConfig cfg;
  cfg.k = 5;
  cfg.w_magic = 5;
  auto r = decode("c", m, lm, KeywordList{}, PromptTemplate{}, cfg, 0);
  CHECK(r.text == "the dog barks loudly.");
}

TEST_CASE("max_tokens one gives one token") {
  auto in = oracle::random_instance(5);
  in.cfg.max_tokens = 1;
  QuietWarnings quiet;
  auto r = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, in.cfg, 0);
  CHECK(r.tokens.size() == 1);
  CHECK(r.trace.step_traces.size() == 1);
}

TEST_CASE("decode is deterministic") {
  auto in = oracle::random_instance(77);
  QuietWarnings quiet;
  auto a = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, in.cfg, 1);
  auto b = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, in.cfg, 1);
  CHECK(caption_to_json(a) == caption_to_json(b));
}

TEST_CASE("first-token end token is kept and warned") {
  NgramLanguageModel lm({"of ."}, 2);
  ToyMatcher m(1, 16);
  DecodeConfig cfg;
  cfg.w_end = 0;
  cfg.w_magic = 0;
  QuietWarnings quiet;
  auto r = decode("anything", m, lm, KeywordList{}, PromptTemplate{}, cfg, 0);
  CHECK(r.text == ".");
  CHECK(quiet.seen.size() == 1);
}

TEST_CASE("scale invariance of the weights") {
  QuietWarnings quiet;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto in = oracle::random_instance(seed);
    DecodeConfig scaled = in.cfg;
    for (double lambda : {0.5, 4.0}) {
      scaled.w_confidence = in.cfg.w_confidence * lambda;
      scaled.w_degeneration = in.cfg.w_degeneration * lambda;
      scaled.w_magic = in.cfg.w_magic * lambda;
      scaled.w_end = in.cfg.w_end * lambda;
      auto a = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, in.cfg, 1);
      auto b = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, scaled, 1);
      CHECK(a.tokens == b.tokens);
    }
  }
}

TEST_CASE("truncation and trace completeness") {
  QuietWarnings quiet;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto in = oracle::random_instance(seed);
    auto r = decode(in.clip, *in.matcher, *in.lm, in.keywords, PromptTemplate{}, in.cfg, seed % 2);
    const auto& st = r.trace;
    CHECK(st.generated.size() <= in.cfg.max_tokens);
    CHECK(st.step_traces.size() == st.generated.size());
    for (std::size_t i = 0; i < st.step_traces.size(); ++i) {
      CHECK(st.step_traces[i].candidates.size() == std::min(in.cfg.k, in.lm->vocab_size()));
      CHECK(st.step_traces[i].candidates[st.step_traces[i].selected].token == st.generated[i]);
    }
    for (std::size_t i = 0; i + 1 < r.tokens.size(); ++i) CHECK(!is_end_token(r.tokens[i], *in.lm, in.cfg));
    for (const auto& e : in.cfg.end_tokens) {
      const auto pos = r.text.find(e);
      if (pos != std::string::npos) CHECK(pos + e.size() == r.text.size());
    }
  }
}

TEST_CASE("truncate_at_end_token") {
  const std::set<std::string> ends = {".", "!", "?"};
  CHECK(truncate_at_end_token("a dog. barks!", ends) == "a dog.");
  CHECK(truncate_at_end_token("no end", ends) == "no end");
  CHECK(truncate_at_end_token("wow! really.", ends) == "wow!");
}

TEST_CASE("caption json carries the trace") {
  auto w = make_toy_world(7, 2);
  auto r = decode("c1", *w.matcher, *w.lm, w.tags, w.tmpl, w.config, 1);
  auto j = nlohmann::json::parse(caption_to_json(r));
  CHECK(j["text"] == "dog barking loudly.");
  CHECK(j["prompt"] == "Objects: dog. This is a sound of");
  CHECK(j["steps"].size() == r.trace.step_traces.size());
  CHECK(j["keywords"][0]["keyword"] == "dog");
}

TEST_CASE("magic_includes_prompt and token pair variants run") {
  auto w = make_toy_world(7, 2);
  DecodeConfig cfg = w.config;
  cfg.magic_includes_prompt = true;
  CHECK_NOTHROW(decode("c1", *w.matcher, *w.lm, w.tags, w.tmpl, cfg, 1));
  cfg.magic_includes_prompt = false;
  cfg.token_pair_magic = true;
  CHECK_NOTHROW(decode("c1", *w.matcher, *w.lm, w.tags, w.tmpl, cfg, 1));
}
