// SPDX-License-Identifier: Apache-2.0
//
// Abstract audio-text matcher and language model, plus the pieces the
// concrete backends share: a concurrent text-embedding cache and the
// seeded hashing embedder used for toy vectors and fixture fallback.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsac/core.h"

namespace zsac {

// CLIP-style dual encoder. Implementations must be safe for concurrent
// const calls once constructed.
class AudioTextMatcher {
 public:
  virtual ~AudioTextMatcher() = default;

  virtual Embedding embed_audio(std::string_view clip_ref) const = 0;
  // Deterministic: equal canonical text yields identical vectors.
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
};

struct TokenProb {
  Token token;
  double probability = 0.0;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::vector<Token> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const Token> tokens) const = 0;

  // The min(k, vocab_size()) most probable next tokens under one proper
  // distribution, sorted by probability descending, ties by lower id.
  virtual std::vector<TokenProb> top_k_next(std::span<const Token> prefix,
                                            std::size_t k) const = 0;

  // Number of tokens the model can predict.
  virtual std::size_t vocab_size() const = 0;

  // The model's own end-of-sequence token, if it has one.
  virtual bool is_end_of_sequence(const Token& token) const = 0;

  virtual std::string name() const = 0;
};

// Insert-if-absent cache keyed by canonical text. Concurrent readers and
// writers are fine; on a race the first inserted value wins and every
// caller sees that value.
class EmbeddingCache {
 public:
  template <typename Compute>
  Embedding get_or_compute(const std::string& key, Compute&& compute) {
    {
      std::shared_lock lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) return it->second;
    }
    Embedding value = compute();
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, std::move(value));
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Embedding> entries_;
};

// Deterministic text -> unit vector map. Each word of the canonical text
// gets a seeded pseudo-random Gaussian direction; the text vector is the
// normalized sum of its word directions, so texts sharing words are
// correlated and a text matches itself exactly. Punctuation at word edges
// is ignored; a text with no words hashes as a single atom.
class HashingEmbedder {
 public:
  HashingEmbedder(std::uint64_t seed, std::size_t dim);

  Embedding embed(std::string_view text) const;
  std::uint64_t seed() const { return seed_; }
  std::size_t dim() const { return dim_; }

  // The bag-of-words atoms the embedding is built from.
  static std::vector<std::string> atoms(std::string_view text);

 private:
  std::vector<double> atom_vector(std::string_view atom) const;

  std::uint64_t seed_;
  std::size_t dim_;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace zsac
