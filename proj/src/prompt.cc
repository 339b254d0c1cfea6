// SPDX-License-Identifier: Apache-2.0

#include "zsac/prompt.h"

#include <algorithm>
#include <vector>

namespace zsac {

void PromptTemplate::validate() const {
  if (base_prompt.empty()) throw InvalidArgumentError("prompt template: base_prompt is empty");
}

std::string build_prompt(const PromptTemplate& tmpl, std::span<const KeywordMatch> matches) {
  tmpl.validate();
  if (matches.empty()) return tmpl.base_prompt;

  std::vector<const KeywordMatch*> ranked;
  for (const auto& m : matches) ranked.push_back(&m);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const KeywordMatch* a, const KeywordMatch* b) { return a->rank < b->rank; });

  std::string out;
  if (!tmpl.keyword_header.empty()) out = tmpl.keyword_header + ": ";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i > 0) out += tmpl.keyword_separator;
    out += ranked[i]->keyword;
  }
  out += tmpl.glue;
  out += tmpl.base_prompt;
  return out;
}

}  // namespace zsac
