// SPDX-License-Identifier: Apache-2.0

#include "zsac/keywords.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "zsac/text.h"

namespace zsac {

KeywordList KeywordList::from_entries(const std::vector<std::string>& entries, std::string source_tag) {
  KeywordList list;
  list.source_tag_ = std::move(source_tag);
  std::unordered_set<std::string> seen;
  for (const std::string& raw : entries) {
    if (raw.find('\n') != std::string::npos || raw.find('\r') != std::string::npos) {
      throw InvalidArgumentError("keyword contains a line break");
    }
    std::string canon = canonicalize(raw);
    if (canon.empty()) throw InvalidArgumentError("empty keyword");
    if (seen.insert(canon).second) list.entries_.push_back(std::move(canon));
  }
  return list;
}

bool KeywordList::contains(std::string_view keyword) const {
  const std::string canon = canonicalize(keyword);
  return std::find(entries_.begin(), entries_.end(), canon) != entries_.end();
}

std::vector<std::string> split_compound_class(std::string_view label) {
  std::vector<std::string> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    const char c = label[i];
    if (c == '(' || c == '[') ++depth;
    if ((c == ')' || c == ']') && depth > 0) --depth;
    if (depth == 0 && c == ',' && i + 1 < label.size() && label[i + 1] == ' ') {
      parts.push_back(trim(label.substr(start, i - start)));
      start = i + 2;
      ++i;
    }
  }
  parts.push_back(trim(label.substr(start)));
  std::erase_if(parts, [](const std::string& p) { return p.empty(); });
  return parts;
}

KeywordList load_keywords(const std::string& path, std::string source_tag) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keyword list " + path);
  std::vector<std::string> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (std::string& part : split_compound_class(canonicalize(t))) raw.push_back(std::move(part));
  }
  if (raw.empty()) throw EmptyKeywordListError("keyword list " + path + " has no entries");
  if (source_tag.empty()) source_tag = path;
  return KeywordList::from_entries(raw, std::move(source_tag));
}

void write_keywords(const std::string& path, const KeywordList& list) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "# " << list.source_tag() << " (" << list.size() << " entries)\n";
  for (const auto& e : list.entries()) out << e << "\n";
  if (!out) throw IoError("failed writing " + path);
}

KeywordList merge_keyword_lists(const KeywordList& base, const KeywordList& extra) {
  std::vector<std::string> all = base.entries();
  all.insert(all.end(), extra.entries().begin(), extra.entries().end());
  std::string tag = base.source_tag();
  if (!extra.source_tag().empty() && extra.source_tag() != base.source_tag()) {
    tag = tag.empty() ? extra.source_tag() : tag + "+" + extra.source_tag();
  }
  return KeywordList::from_entries(all, std::move(tag));
}

std::vector<KeywordMatch> select_keywords(const AudioTextMatcher& matcher, const Embedding& audio,
                                          const KeywordList& list, std::size_t l,
                                          const KeywordSelectOptions& options) {
  if (l > list.size()) {
    throw InvalidArgumentError("cannot select " + std::to_string(l) + " keywords from a list of " +
                               std::to_string(list.size()));
  }
  if (l == 0) return {};

  const auto& entries = list.entries();
  std::vector<double> sims(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::string text = entries[i];
    if (options.embed_template) {
      text = *options.embed_template;
      if (auto pos = text.find("{}"); pos != std::string::npos) {
        text.replace(pos, 2, entries[i]);
      } else {
        text += " " + entries[i];
      }
    }
    sims[i] = cosine_similarity(matcher.embed_text(text), audio);
  }

  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

  std::vector<KeywordMatch> out;
  out.reserve(l);
  for (std::size_t r = 0; r < l; ++r) {
    out.push_back(KeywordMatch{entries[order[r]], sims[order[r]], r + 1});
  }
  return out;
}

std::vector<KeywordMatch> select_keywords(const AudioTextMatcher& matcher, std::string_view clip_ref,
                                          const KeywordList& list, std::size_t l,
                                          const KeywordSelectOptions& options) {
  if (l > list.size()) {
    throw InvalidArgumentError("cannot select " + std::to_string(l) + " keywords from a list of " +
                               std::to_string(list.size()));
  }
  if (l == 0) return {};
  return select_keywords(matcher, matcher.embed_audio(clip_ref), list, l, options);
}

}  // namespace zsac
