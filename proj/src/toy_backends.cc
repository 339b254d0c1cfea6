// SPDX-License-Identifier: Apache-2.0

#include "zsac/toy_backends.h"

#include <algorithm>

#include "zsac/text.h"

namespace zsac {

ToyMatcher::ToyMatcher(std::uint64_t seed, std::size_t dim, double noise)
    : embedder_(seed, dim), noise_(noise) {
  if (noise < 0.0) throw InvalidArgumentError("toy matcher noise must be >= 0");
}

void ToyMatcher::register_clip(std::string clip_id, std::string true_description) {
  descriptions_[std::move(clip_id)] = std::move(true_description);
}

Embedding ToyMatcher::embed_text(std::string_view text) const {
  return cache_.get_or_compute(canonicalize(text), [&] { return embedder_.embed(text); });
}

Embedding ToyMatcher::embed_audio(std::string_view clip_ref) const {
  auto it = descriptions_.find(std::string(clip_ref));
  const std::string description = it != descriptions_.end() ? it->second : std::string(clip_ref);
  Embedding clean = embed_text(description);
  if (noise_ == 0.0) return clean;

  std::uint64_t state = fnv1a64(clip_ref) ^ (embedder_.seed() * 0x2545f4914f6cdd1dULL);
  std::vector<double> v(clean.values().begin(), clean.values().end());
  for (double& x : v) {
    double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;  // [0, 1)
    x += noise_ * (2.0 * u - 1.0);
  }
  return Embedding(std::move(v));
}

std::shared_ptr<ToyMatcher> toy_matcher(std::uint64_t seed, std::size_t dim, double noise) {
  return std::make_shared<ToyMatcher>(seed, dim, noise);
}

NgramLanguageModel::NgramLanguageModel(const std::vector<std::string>& corpus, int order)
    : order_(order) {
  if (corpus.empty()) throw EmptyInputError("toy_lm: empty corpus");
  if (order < 1 || order > 3) throw InvalidArgumentError("toy_lm: order must be 1, 2 or 3");

  surfaces_ = {"<bos>", "<eos>", "<unk>"};
  for (TokenId i = 0; i < surfaces_.size(); ++i) ids_[surfaces_[i]] = i;

  std::vector<std::vector<TokenId>> lines;
  for (const std::string& line : corpus) {
    std::vector<TokenId> ids;
    for (const std::string& word : word_tokenize(canonicalize(line))) {
      auto [it, inserted] = ids_.try_emplace(word, static_cast<TokenId>(surfaces_.size()));
      if (inserted) surfaces_.push_back(word);
      ids.push_back(it->second);
    }
    lines.push_back(std::move(ids));
  }

  const std::size_t history = static_cast<std::size_t>(order_ - 1);
  for (const auto& line : lines) {
    std::vector<TokenId> seq(history, kBos);
    seq.insert(seq.end(), line.begin(), line.end());
    seq.push_back(kEos);
    for (std::size_t i = history; i < seq.size(); ++i) {
      std::vector<TokenId> ctx(seq.begin() + static_cast<long>(i - history),
                               seq.begin() + static_cast<long>(i));
      counts_[ctx][seq[i]] += 1;
      context_totals_[ctx] += 1;
    }
  }
}

std::optional<TokenId> NgramLanguageModel::lookup(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<Token> NgramLanguageModel::encode(std::string_view text) const {
  std::vector<Token> out;
  for (const std::string& word : word_tokenize(canonicalize(text))) {
    auto it = ids_.find(word);
    out.push_back(Token{it != ids_.end() ? it->second : kUnk, word});
  }
  return out;
}

std::string NgramLanguageModel::decode(std::span<const Token> tokens) const {
  std::vector<std::string> words;
  for (const Token& t : tokens) {
    if (t.id == kBos || t.id == kEos) continue;
    words.push_back(t.surface);
  }
  return word_detokenize(words);
}

std::vector<TokenId> NgramLanguageModel::context_of(std::span<const Token> prefix) const {
  const std::size_t history = static_cast<std::size_t>(order_ - 1);
  std::vector<TokenId> ctx(history, kBos);
  const std::size_t take = std::min(history, prefix.size());
  for (std::size_t i = 0; i < take; ++i) {
    ctx[history - take + i] = prefix[prefix.size() - take + i].id;
  }
  return ctx;
}

double NgramLanguageModel::probability(std::span<const Token> prefix, TokenId next) const {
  const std::vector<TokenId> ctx = context_of(prefix);
  const double v = static_cast<double>(vocab_size());
  std::size_t joint = 0;
  std::size_t total = 0;
  if (auto it = counts_.find(ctx); it != counts_.end()) {
    if (auto jt = it->second.find(next); jt != it->second.end()) joint = jt->second;
    total = context_totals_.at(ctx);
  }
  return (static_cast<double>(joint) + 1.0) / (static_cast<double>(total) + v);
}

std::vector<TokenProb> NgramLanguageModel::top_k_next(std::span<const Token> prefix,
                                                      std::size_t k) const {
  const std::vector<TokenId> ctx = context_of(prefix);
  const std::unordered_map<TokenId, std::size_t>* row = nullptr;
  std::size_t total = 0;
  if (auto it = counts_.find(ctx); it != counts_.end()) {
    row = &it->second;
    total = context_totals_.at(ctx);
  }
  const double denom = static_cast<double>(total) + static_cast<double>(vocab_size());

  std::vector<TokenProb> all;
  all.reserve(vocab_size());
  auto push = [&](TokenId id) {
    std::size_t c = 0;
    if (row) {
      if (auto jt = row->find(id); jt != row->end()) c = jt->second;
    }
    all.push_back(TokenProb{Token{id, surfaces_[id]}, (static_cast<double>(c) + 1.0) / denom});
  };
  push(kEos);
  for (TokenId id = kUnk + 1; id < surfaces_.size(); ++id) push(id);

  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<long>(n), all.end(),
                    [](const TokenProb& a, const TokenProb& b) {
                      if (a.probability != b.probability) return a.probability > b.probability;
                      return a.token.id < b.token.id;
                    });
  all.resize(n);
  return all;
}

std::shared_ptr<NgramLanguageModel> toy_lm(const std::vector<std::string>& corpus, int order) {
  return std::make_shared<NgramLanguageModel>(corpus, order);
}

}  // namespace zsac
