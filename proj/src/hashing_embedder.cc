// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <cmath>
#include <numbers>

#include "zsac/backends.h"
#include "zsac/text.h"

namespace zsac {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

HashingEmbedder::HashingEmbedder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
  if (dim < 2) throw InvalidArgumentError("hashing embedder needs dim >= 2");
}

std::vector<std::string> HashingEmbedder::atoms(std::string_view text) {
  const std::string canon = canonicalize(text);
  std::vector<std::string> out;
  for (const std::string& word : split_whitespace(canon)) {
    std::size_t b = 0;
    std::size_t e = word.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(word[e - 1]))) --e;
    if (e > b) out.push_back(word.substr(b, e - b));
  }
  if (out.empty()) out.push_back(canon);
  return out;
}

std::vector<double> HashingEmbedder::atom_vector(std::string_view atom) const {
  std::uint64_t state = fnv1a64(atom);
  std::uint64_t seed_state = seed_;
  state ^= splitmix64(seed_state);
  std::vector<double> v(dim_);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < dim_; i += 2) {
    // Box-Muller on 53-bit uniforms in (0, 1).
    double u1 = (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    double u2 = (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    v[i] = r * std::cos(theta);
    if (i + 1 < dim_) v[i + 1] = r * std::sin(theta);
  }
  for (double x : v) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

Embedding HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> sum(dim_, 0.0);
  for (const std::string& atom : atoms(text)) {
    std::vector<double> v = atom_vector(atom);
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += v[i];
  }
  double norm2 = 0.0;
  for (double x : sum) norm2 += x * x;
  if (norm2 == 0.0) {
    // Word directions cancelled exactly; fall back to the whole string.
    sum = atom_vector(canonicalize(text));
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : sum) x *= inv;
  return Embedding(std::move(sum));
}

}  // namespace zsac
