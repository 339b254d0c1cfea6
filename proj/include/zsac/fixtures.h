// SPDX-License-Identifier: Apache-2.0
//
// File-fed backends replaying exported embeddings and next-token tables.
//
// Embedding fixtures (schema "emb/1") are line-delimited JSON:
//   {"schema": "emb/1", "fallback_seed": 17}            <- header, line 1
//   {"id": "clip_0001", "kind": "audio", "dim": 4, "v": [0.1, ...]}
//   {"id": "dog barking", "kind": "text", "dim": 4, "v": [...]}
// The header may also carry "dim", which is required when the file has no
// records. Text ids are matched after canonicalization; text that has no
// record is embedded with HashingEmbedder(fallback_seed, dim).
//
// LM fixtures (schema "lm/1") are one JSON document:
//   {"schema": "lm/1", "granularity": "word", "vocab": [...],
//    "ngrams": {"sound of": {"a": 0.4, "rain": 0.1}, "": {...}}}
// A lookup uses the longest key that equals the tail of the context
// (tokens joined by a space for word granularity, concatenated for
// subword). Mass a row leaves unassigned is spread evenly over the
// predictable tokens it does not list.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zsac/backends.h"

namespace zsac {

struct FixtureStore {
  std::uint64_t fallback_seed = 0;
  std::size_t dim = 0;
  std::map<std::string, Embedding> audio;  // clip_id -> embedding
  std::map<std::string, Embedding> text;   // canonical text -> embedding
};

// Throws IoError, ParseError (with line number), DuplicateIdError and
// DimensionError.
FixtureStore load_embedding_fixtures(const std::string& path);
// Merges several files; all must agree on dim. The first header's seed wins.
FixtureStore load_embedding_fixtures(const std::vector<std::string>& paths);

void write_embedding_fixtures(const std::string& path, const FixtureStore& store);

class FixtureMatcher : public AudioTextMatcher {
 public:
  explicit FixtureMatcher(FixtureStore store, std::string name = "fixture");

  Embedding embed_audio(std::string_view clip_ref) const override;
  Embedding embed_text(std::string_view text) const override;
  std::size_t dim() const override { return store_.dim; }
  std::string name() const override { return name_; }

  const FixtureStore& store() const { return store_; }
  std::size_t fallback_count() const { return fallback_cache_.size(); }

 private:
  FixtureStore store_;
  std::string name_;
  HashingEmbedder fallback_;
  mutable EmbeddingCache fallback_cache_;
};

enum class Granularity { kWord, kSubword };

struct LmTable {
  Granularity granularity = Granularity::kWord;
  std::vector<std::string> vocab;
  // prefix string -> (token surface, probability)
  std::map<std::string, std::vector<std::pair<std::string, double>>> ngrams;
};

LmTable load_lm_table(const std::string& path);
void write_lm_table(const std::string& path, const LmTable& table);

// Replays an LmTable. "<eos>" in the vocabulary is the end-of-sequence
// token; "<bos>" and "<unk>" are never predicted.
class TableLanguageModel : public LanguageModel {
 public:
  static constexpr TokenId kUnknown = 0xffffffffu;

  explicit TableLanguageModel(const LmTable& table, std::string name = "fixture-lm");

  std::vector<Token> encode(std::string_view text) const override;
  std::string decode(std::span<const Token> tokens) const override;
  std::vector<TokenProb> top_k_next(std::span<const Token> prefix, std::size_t k) const override;
  std::size_t vocab_size() const override { return predictable_.size(); }
  bool is_end_of_sequence(const Token& token) const override {
    return eos_ && token.id == *eos_;
  }
  std::string name() const override { return name_; }

  Granularity granularity() const { return granularity_; }

 private:
  struct Row {
    std::vector<TokenProb> listed;  // sorted by probability desc, id asc
    std::vector<bool> is_listed;    // indexed by token id
    double residual_share = 0.0;    // probability of each unlisted token
  };

  std::string normalize_key(std::string_view key) const;
  const Row* find_row(std::span<const Token> prefix) const;

  Granularity granularity_;
  std::string name_;
  std::vector<std::string> vocab_;
  std::map<std::string, TokenId> ids_;
  std::vector<TokenId> predictable_;  // ascending
  std::optional<TokenId> eos_;
  std::map<std::string, Row> rows_;
  std::size_t max_key_tokens_ = 0;
};

// Load both fixture kinds and wrap them as backends.
std::pair<std::shared_ptr<AudioTextMatcher>, std::shared_ptr<LanguageModel>> load_fixtures(
    const std::string& embeddings_path, const std::string& lm_path);

// Checks a fixture file of either schema. Returns a one-line summary;
// throws the loader's error on failure.
std::string validate_fixture_file(const std::string& path);

}  // namespace zsac
