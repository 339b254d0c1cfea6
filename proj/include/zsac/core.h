// SPDX-License-Identifier: Apache-2.0
//
// Numeric and text primitives shared by every zsac module.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zsac {

// Error hierarchy. Everything thrown by the library derives from Error so
// callers (the CLI, the batch harness) can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class DegenerateVectorError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class InvalidArgumentError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class DuplicateIdError : public Error { using Error::Error; };
class UnknownClipError : public Error { using Error::Error; };

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  // 1-based; 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A point in the shared audio-text space. Values are kept exactly as
// produced (no normalization) so fixtures round-trip bit-for-bit.
class Embedding {
 public:
  // Throws DimensionError on empty input and InvalidArgumentError on
  // NaN/Inf entries.
  explicit Embedding(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

using TokenId = std::uint32_t;

struct Token {
  TokenId id = 0;
  std::string surface;

  friend bool operator==(const Token&, const Token&) = default;
};

// One row of a decode-step trace.
struct ScoredCandidate {
  Token token;
  double probability = 0.0;   // raw LM probability, before renormalization
  double confidence = 0.0;    // renormalized over the step's candidates
  double degeneration = 0.0;  // max similarity to already generated tokens
  double magic = 0.0;         // softmax-normalized audio alignment
  double end_penalty = 0.0;   // premature-ending penalty actually subtracted
  double final_score = 0.0;
};

// x.y / (|x||y|), clamped to [-1, 1].
double cosine_similarity(const Embedding& x, const Embedding& y);

// Max-subtracted softmax. Throws EmptyInputError on empty input and
// InvalidArgumentError on non-finite scores.
std::vector<double> softmax(std::span<const double> scores);

// 1 / (1 + generated_count): the premature-ending penalty.
double end_penalty(std::size_t generated_count);

}  // namespace zsac
