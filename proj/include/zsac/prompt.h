// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

#include "zsac/keywords.h"

namespace zsac {

// Keyword-prompt layout: "{header}: {k1}{sep}{k2}{glue}{base_prompt}".
struct PromptTemplate {
  std::string keyword_header = "Objects";
  std::string base_prompt = "This is a sound of";
  std::string keyword_separator = ", ";
  std::string glue = ". ";

  // Throws InvalidArgumentError when base_prompt is empty.
  void validate() const;
};

// With no matches the base prompt is returned alone. Keywords appear in
// rank order.
std::string build_prompt(const PromptTemplate& tmpl, std::span<const KeywordMatch> matches);

}  // namespace zsac
