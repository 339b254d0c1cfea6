// SPDX-License-Identifier: Apache-2.0
//
// Keyword lists and zero-shot keyword selection.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zsac/backends.h"
#include "zsac/core.h"

namespace zsac {

class EmptyKeywordListError : public Error { using Error::Error; };

// Ordered, canonical, duplicate-free list of audio class names.
class KeywordList {
 public:
  KeywordList() = default;

  // Canonicalizes every entry and drops duplicates (first occurrence wins).
  // Throws InvalidArgumentError on empty entries or entries with line breaks.
  static KeywordList from_entries(const std::vector<std::string>& entries, std::string source_tag);

  const std::vector<std::string>& entries() const { return entries_; }
  const std::string& source_tag() const { return source_tag_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(std::string_view keyword) const;

  friend bool operator==(const KeywordList&, const KeywordList&) = default;

 private:
  std::vector<std::string> entries_;
  std::string source_tag_;
};

// Splits "a, b" style compound classes at ", " outside parentheses.
std::vector<std::string> split_compound_class(std::string_view label);

// One keyword per line; '#' comment lines and blank lines are skipped.
// Throws IoError or EmptyKeywordListError.
KeywordList load_keywords(const std::string& path, std::string source_tag = "");

void write_keywords(const std::string& path, const KeywordList& list);

// Union: base order first, then unseen extras in their order.
KeywordList merge_keyword_lists(const KeywordList& base, const KeywordList& extra);

struct KeywordMatch {
  std::string keyword;
  double similarity = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const KeywordMatch&, const KeywordMatch&) = default;
};

struct KeywordSelectOptions {
  // When set, each keyword is embedded as the template with "{}" replaced
  // by the keyword (e.g. "This is a sound of {}"); otherwise raw text.
  std::optional<std::string> embed_template;
};

// Top-l keywords by cosine similarity to the clip's audio embedding, ties
// broken by list order. Throws InvalidArgumentError when l > list size.
std::vector<KeywordMatch> select_keywords(const AudioTextMatcher& matcher, std::string_view clip_ref,
                                          const KeywordList& list, std::size_t l,
                                          const KeywordSelectOptions& options = {});

// Same, against a precomputed audio embedding.
std::vector<KeywordMatch> select_keywords(const AudioTextMatcher& matcher, const Embedding& audio,
                                          const KeywordList& list, std::size_t l,
                                          const KeywordSelectOptions& options = {});

}  // namespace zsac
