// SPDX-License-Identifier: Apache-2.0

#include "zsac/text.h"

#include <cctype>
#include <iostream>
#include <mutex>

namespace zsac {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '(': case ')':
      return true;
    default:
      return false;
  }
}

bool is_closing(std::string_view token) {
  return token.size() == 1 && (token[0] == '.' || token[0] == ',' || token[0] == '!' ||
                               token[0] == '?' || token[0] == ';' || token[0] == ':' ||
                               token[0] == ')');
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s;
  return s;
}

}  // namespace

std::string canonicalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (!is_punct(c)) return false;
  }
  return true;
}

std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& piece : split_whitespace(text)) {
    std::size_t b = 0;
    std::size_t e = piece.size();
    std::vector<std::string> trailing;
    while (b < e && is_punct(piece[b])) {
      out.emplace_back(1, piece[b]);
      ++b;
    }
    while (e > b && is_punct(piece[e - 1])) {
      trailing.emplace_back(1, piece[e - 1]);
      --e;
    }
    if (e > b) out.push_back(piece.substr(b, e - b));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

std::string word_detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool glue_next = false;
  for (const std::string& t : tokens) {
    if (t.empty()) continue;
    if (!out.empty() && !is_closing(t) && !glue_next) out.push_back(' ');
    out += t;
    glue_next = (t == "(");
  }
  return out;
}

void set_warning_sink(WarningSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) {
    sink()(message);
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

}  // namespace zsac
