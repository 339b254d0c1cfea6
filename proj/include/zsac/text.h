// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace zsac {

// ASCII lowercase, trimmed, inner whitespace runs collapsed to one space.
std::string canonicalize(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);

std::string trim(std::string_view text);

bool is_punctuation_token(std::string_view token);

// Word-level tokenization: whitespace split, then leading/trailing
// punctuation characters are peeled off into their own tokens.
// "Objects: dog." -> {"Objects", ":", "dog", "."}
std::vector<std::string> word_tokenize(std::string_view text);

// Inverse of word_tokenize for canonically spaced text: tokens joined
// by a space, closing punctuation attached to the previous token.
std::string word_detokenize(const std::vector<std::string>& tokens);

// Warnings go to stderr unless a sink is installed (tests silence them).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace zsac
