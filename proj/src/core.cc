// SPDX-License-Identifier: Apache-2.0

#include "zsac/core.h"

#include <algorithm>
#include <cmath>

namespace zsac {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw DimensionError("embedding must have dim >= 1");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw InvalidArgumentError("embedding contains a non-finite entry");
    }
  }
}

double Embedding::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

double cosine_similarity(const Embedding& x, const Embedding& y) {
  if (x.dim() != y.dim()) {
    throw DimensionError("cosine_similarity: dim " + std::to_string(x.dim()) +
                         " vs " + std::to_string(y.dim()));
  }
  double dot = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    dot += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0) {
    throw DegenerateVectorError("cosine_similarity: zero-norm vector");
  }
  double sim = dot / (std::sqrt(xx) * std::sqrt(yy));
  return std::clamp(sim, -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) {
    throw EmptyInputError("softmax: empty input");
  }
  double max_score = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw InvalidArgumentError("softmax: non-finite score");
    }
    max_score = std::max(max_score, s);
  }
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - max_score);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double end_penalty(std::size_t generated_count) {
  return 1.0 / (1.0 + static_cast<double>(generated_count));
}

}  // namespace zsac
