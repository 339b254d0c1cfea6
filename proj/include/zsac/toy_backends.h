// SPDX-License-Identifier: Apache-2.0
//
// Deterministic in-process backends for tests, CI and the toy world.

#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "zsac/backends.h"

namespace zsac {

// Text vectors come from HashingEmbedder. A clip reference is either a
// registered clip id (mapped to its true description) or the description
// itself; the audio vector is the description's text vector plus uniform
// noise in [-noise, noise] per coordinate, seeded by the clip reference.
class ToyMatcher : public AudioTextMatcher {
 public:
  ToyMatcher(std::uint64_t seed, std::size_t dim, double noise = 0.0);

  void register_clip(std::string clip_id, std::string true_description);

  Embedding embed_audio(std::string_view clip_ref) const override;
  Embedding embed_text(std::string_view text) const override;
  std::size_t dim() const override { return embedder_.dim(); }
  std::string name() const override { return "toy"; }

  std::uint64_t seed() const { return embedder_.seed(); }

 private:
  HashingEmbedder embedder_;
  double noise_;
  std::unordered_map<std::string, std::string> descriptions_;
  mutable EmbeddingCache cache_;
};

std::shared_ptr<ToyMatcher> toy_matcher(std::uint64_t seed, std::size_t dim, double noise = 0.0);

// Word-level n-gram model (n in 1..3) with add-one smoothing. Text is
// lowercased before tokenization. Reserved ids: 0 <bos>, 1 <eos>, 2 <unk>;
// corpus words follow in first-occurrence order. The predictable set is
// the corpus words plus <eos>.
class NgramLanguageModel : public LanguageModel {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;

  NgramLanguageModel(const std::vector<std::string>& corpus, int order);

  std::vector<Token> encode(std::string_view text) const override;
  std::string decode(std::span<const Token> tokens) const override;
  std::vector<TokenProb> top_k_next(std::span<const Token> prefix, std::size_t k) const override;
  std::size_t vocab_size() const override { return surfaces_.size() - 2; }
  bool is_end_of_sequence(const Token& token) const override { return token.id == kEos; }
  std::string name() const override { return "toy-ngram-" + std::to_string(order_); }

  int order() const { return order_; }
  // Exact smoothed P(next | context) where context is the last order-1
  // tokens of prefix, left-padded with <bos>.
  double probability(std::span<const Token> prefix, TokenId next) const;
  const std::string& surface(TokenId id) const { return surfaces_.at(id); }
  std::optional<TokenId> lookup(const std::string& word) const;

 private:
  std::vector<TokenId> context_of(std::span<const Token> prefix) const;

  int order_;
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
  std::map<std::vector<TokenId>, std::unordered_map<TokenId, std::size_t>> counts_;
  std::map<std::vector<TokenId>, std::size_t> context_totals_;
};

std::shared_ptr<NgramLanguageModel> toy_lm(const std::vector<std::string>& corpus, int order);

}  // namespace zsac
