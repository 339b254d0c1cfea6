// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "unit/test_util.h"
#include "zsac/fixtures.h"
#include "zsac/text.h"
#include "zsac/toy_backends.h"

using namespace zsac;

namespace {

struct QuietWarnings {
  std::vector<std::string> seen;
  QuietWarnings() {
    set_warning_sink([this](const std::string& m) { seen.push_back(m); });
  }
  ~QuietWarnings() { set_warning_sink(nullptr); }
};

LmTable small_table() {
  LmTable t;
  t.vocab = {"<bos>", "<eos>", "<unk>", "a", "sound", "of", "rain", "dog", "."};
  t.ngrams["sound of"] = {{"rain", 0.5}, {"dog", 0.3}};
  t.ngrams["of"] = {{"a", 0.9}};
  t.ngrams[""] = {{".", 0.4}};
  return t;
}

std::vector<Token> tokens(const TableLanguageModel& lm, const std::string& text) { return lm.encode(text); }

}  // namespace

TEST_CASE("single audio record sets the matcher dim") {
  TempDir dir;
  write_file(dir.file("e.jsonl"),
             "{\"schema\": \"emb/1\", \"fallback_seed\": 3}\n"
             "{\"id\": \"clip_1\", \"kind\": \"audio\", \"dim\": 4, \"v\": [0.1, 0.2, 0.3, 0.4]}\n");
  FixtureMatcher m(load_embedding_fixtures(dir.file("e.jsonl")));
  CHECK(m.dim() == 4);
  CHECK(m.embed_audio("clip_1")[2] == 0.3);
  CHECK_THROWS_AS(m.embed_audio("clip_2"), UnknownClipError);
}

TEST_CASE("embedding fixture errors") {
  TempDir dir;
  const std::string header = "{\"schema\": \"emb/1\", \"fallback_seed\": 3}\n";
  const std::string rec = "{\"id\": \"c\", \"kind\": \"audio\", \"dim\": 2, \"v\": [1, 2]}\n";

  write_file(dir.file("dup.jsonl"), header + rec + rec);
  CHECK_THROWS_AS(load_embedding_fixtures(dir.file("dup.jsonl")), DuplicateIdError);

  write_file(dir.file("bad.jsonl"), header + rec + "{not json\n");
  try {
    load_embedding_fixtures(dir.file("bad.jsonl"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  write_file(dir.file("dim.jsonl"), header + "{\"id\": \"c\", \"kind\": \"audio\", \"dim\": 3, \"v\": [1, 2]}\n");
  CHECK_THROWS_AS(load_embedding_fixtures(dir.file("dim.jsonl")), DimensionError);

  write_file(dir.file("mixed.jsonl"), header + rec + "{\"id\": \"t\", \"kind\": \"text\", \"dim\": 3, \"v\": [1, 2, 3]}\n");
  CHECK_THROWS_AS(load_embedding_fixtures(dir.file("mixed.jsonl")), DimensionError);

  write_file(dir.file("schema.jsonl"), "{\"schema\": \"emb/2\", \"fallback_seed\": 3}\n" + rec);
  CHECK_THROWS_AS(load_embedding_fixtures(dir.file("schema.jsonl")), ParseError);

  write_file(dir.file("empty.jsonl"), header);
  CHECK_THROWS_AS(load_embedding_fixtures(dir.file("empty.jsonl")), ParseError);

  CHECK_THROWS_AS(load_embedding_fixtures(dir.file("missing.jsonl")), IoError);
}

TEST_CASE("toy embeddings round-trip bit-exactly") {
  TempDir dir;
  ToyMatcher toy(17, 48, 0.01);
  FixtureStore store;
  store.fallback_seed = 17;
  store.dim = 48;
  std::vector<std::string> texts;
  for (int i = 0; i < 25; ++i) {
    const std::string id = "clip_" + std::to_string(i);
    toy.register_clip(id, "thing " + std::to_string(i) + " humming");
    store.audio.emplace(id, toy.embed_audio(id));
    texts.push_back("word" + std::to_string(i) + " noise");
    store.text.emplace(texts.back(), toy.embed_text(texts.back()));
  }
  write_embedding_fixtures(dir.file("e.jsonl"), store);
  FixtureMatcher m(load_embedding_fixtures(dir.file("e.jsonl")));
  int compared = 0;
  for (const auto& [id, e] : store.audio) {
    CHECK(m.embed_audio(id) == e);
    ++compared;
  }
  for (const auto& t : texts) {
    CHECK(m.embed_text(t) == toy.embed_text(t));
    ++compared;
  }
  CHECK(compared == 50);
  CHECK(m.fallback_count() == 0);
}

TEST_CASE("fixture fallback reproduces the toy rule") {
  FixtureStore store;
  store.fallback_seed = 5;
  store.dim = 16;
  FixtureMatcher m(store);
  ToyMatcher toy(5, 16);
  CHECK(m.embed_text("Unseen  Prefix") == toy.embed_text("unseen prefix"));
  CHECK(m.fallback_count() == 1);
}

TEST_CASE("multiple embedding files merge") {
  TempDir dir;
  const std::string header = "{\"schema\": \"emb/1\", \"fallback_seed\": 3}\n";
  write_file(dir.file("a.jsonl"), header + "{\"id\": \"a\", \"kind\": \"audio\", \"dim\": 2, \"v\": [1, 0]}\n");
  write_file(dir.file("b.jsonl"), header + "{\"id\": \"dog\", \"kind\": \"text\", \"dim\": 2, \"v\": [0, 1]}\n");
  FixtureStore s = load_embedding_fixtures(std::vector<std::string>{dir.file("a.jsonl"), dir.file("b.jsonl")});
  CHECK(s.audio.size() == 1);
  CHECK(s.text.size() == 1);
  write_file(dir.file("c.jsonl"), header + "{\"id\": \"a\", \"kind\": \"audio\", \"dim\": 2, \"v\": [1, 1]}\n");
  CHECK_THROWS_AS(load_embedding_fixtures(std::vector<std::string>{dir.file("a.jsonl"), dir.file("c.jsonl")}),
                  DuplicateIdError);
}

TEST_CASE("table lm longest-suffix lookup") {
  TableLanguageModel lm(small_table());
  auto top = lm.top_k_next(tokens(lm, "a sound of"), 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].token.surface == "rain");
  CHECK(top[0].probability == doctest::Approx(0.5));
  CHECK(top[1].token.surface == "dog");

  auto of = lm.top_k_next(tokens(lm, "dog of"), 1);
  CHECK(of[0].token.surface == "a");

  auto fallback = lm.top_k_next(tokens(lm, "rain"), 1);
  CHECK(fallback[0].token.surface == ".");
}

TEST_CASE("table lm rows form one proper distribution") {
  TableLanguageModel lm(small_table());
  CHECK(lm.vocab_size() == 7);  // <bos> and <unk> are never predicted
  for (const std::string ctx : {"a sound of", "of", "rain", ""}) {
    auto all = lm.top_k_next(tokens(lm, ctx), 100);
    REQUIRE(all.size() == 7);
    double sum = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      sum += all[i].probability;
      CHECK(all[i].probability > 0.0);
      if (i) CHECK(all[i].probability <= all[i - 1].probability);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("table lm without a fallback row is uniform") {
  LmTable t = small_table();
  t.ngrams.erase("");
  TableLanguageModel lm(t);
  auto u = lm.top_k_next(tokens(lm, "rain"), 3);
  for (const auto& tp : u) CHECK(tp.probability == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("table lm warns on out-of-vocabulary entries and reserves residual mass") {
  QuietWarnings quiet;
  LmTable t = small_table();
  t.ngrams["rain"] = {{"asdfasdf", 0.2}, {"dog", 1.0}};
  TableLanguageModel lm(t);
  CHECK(quiet.seen.size() == 1);
  auto top = lm.top_k_next(tokens(lm, "rain"), 7);
  CHECK(top[0].token.surface == "dog");
  CHECK(top[0].probability < 1.0);
  CHECK(top[1].probability > 0.0);
}

TEST_CASE("table lm encode and decode") {
  TableLanguageModel lm(small_table());
  auto t = lm.encode("a sound of rain.");
  REQUIRE(t.size() == 5);
  CHECK(lm.decode(t) == "a sound of rain.");
  auto unk = lm.encode("a zebra");
  CHECK(unk[1].id == TableLanguageModel::kUnknown);
  CHECK(lm.decode(unk) == "a zebra");
  CHECK(lm.is_end_of_sequence(Token{1, "<eos>"}));

  LmTable sub;
  sub.granularity = Granularity::kSubword;
  sub.vocab = {"<eos>", "ra", "in", "r", "a", "i", "n"};
  sub.ngrams["ra"] = {{"in", 0.9}};
  TableLanguageModel slm(sub);
  auto pieces = slm.encode("rain");
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].surface == "ra");
  CHECK(slm.decode(pieces) == "rain");
  CHECK(slm.top_k_next(slm.encode("xra"), 1)[0].token.surface == "in");
}

TEST_CASE("lm table file round-trip and errors") {
  TempDir dir;
  LmTable t = small_table();
  write_lm_table(dir.file("lm.json"), t);
  LmTable back = load_lm_table(dir.file("lm.json"));
  CHECK(back.vocab == t.vocab);
  CHECK(back.ngrams.size() == t.ngrams.size());
  TableLanguageModel a(t);
  TableLanguageModel b(back);
  auto x = a.top_k_next(tokens(a, "a sound of"), 7);
  auto y = b.top_k_next(tokens(b, "a sound of"), 7);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].token == y[i].token);
    CHECK(x[i].probability == y[i].probability);
  }

  write_file(dir.file("over.json"),
             R"({"schema": "lm/1", "granularity": "word", "vocab": ["a", "b"], "ngrams": {"": {"a": 0.7, "b": 0.6}}})");
  CHECK_THROWS_AS(TableLanguageModel(load_lm_table(dir.file("over.json"))), ParseError);
  write_file(dir.file("schema.json"), R"({"schema": "lm/9", "vocab": ["a"], "ngrams": {}})");
  CHECK_THROWS_AS(load_lm_table(dir.file("schema.json")), ParseError);
  write_file(dir.file("dupvocab.json"), R"({"schema": "lm/1", "granularity": "word", "vocab": ["a", "a"], "ngrams": {}})");
  CHECK_THROWS_AS(TableLanguageModel(load_lm_table(dir.file("dupvocab.json"))), DuplicateIdError);
}

TEST_CASE("validate fixture files") {
  TempDir dir;
  write_lm_table(dir.file("lm.json"), small_table());
  CHECK(validate_fixture_file(dir.file("lm.json")).rfind("lm/1 ok", 0) == 0);
  FixtureStore s;
  s.fallback_seed = 1;
  s.dim = 2;
  s.audio.emplace("a", Embedding({1.0, 2.0}));
  write_embedding_fixtures(dir.file("e.jsonl"), s);
  CHECK(validate_fixture_file(dir.file("e.jsonl")) == "emb/1 ok: dim 2, 1 audio, 0 text records");
  auto [matcher, lm] = load_fixtures(dir.file("e.jsonl"), dir.file("lm.json"));
  CHECK(matcher->dim() == 2);
  CHECK(lm->vocab_size() == 7);
}
