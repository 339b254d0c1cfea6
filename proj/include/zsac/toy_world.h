// SPDX-License-Identifier: Apache-2.0
//
// A small self-contained captioning world with perfect audio-text
// alignment: every clip's audio embedding is the text embedding of its
// true description, and a table LM that only proposes a subject word when
// that subject is named in the prompt's keyword slot.

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "zsac/decoder.h"
#include "zsac/fixtures.h"
#include "zsac/harness.h"
#include "zsac/keywords.h"
#include "zsac/prompt.h"
#include "zsac/toy_backends.h"

namespace zsac {

struct ToyWorld {
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  Manifest manifest;  // audio = clip id
  std::shared_ptr<ToyMatcher> matcher;
  LmTable table;
  std::shared_ptr<TableLanguageModel> lm;
  KeywordList tags;      // subjects plus distractors
  KeywordList expanded;  // tags plus "subject verb" phrases
  PromptTemplate tmpl;
  DecodeConfig config;

  Backends backends() const;
};

// At most 20 clips (10 subjects, two descriptions each).
ToyWorld make_toy_world(std::uint64_t seed = 7, std::size_t clips = 20, std::size_t dim = 128);

// Writes manifest.jsonl, embeddings.jsonl, lm.json, keywords.txt,
// keywords_expanded.txt and references.json into dir (created if needed).
// Loading these through the fixture backend reproduces the toy backend.
void write_toy_world(const ToyWorld& world, const std::string& dir);

}  // namespace zsac
