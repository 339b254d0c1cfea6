// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "zsac/core.h"
#include "zsac/text.h"

using namespace zsac;

namespace {

Embedding vec(std::vector<double> v) { return Embedding(std::move(v)); }

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  CHECK(cosine_similarity(vec({1, 0}), vec({1, 0})) == doctest::Approx(1.0));
  CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK(cosine_similarity(vec({1, 2, 2}), vec({2, 1, 2})) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("cosine similarity errors") {
  CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), DimensionError);
  CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 0})), DegenerateVectorError);
  CHECK_THROWS_AS(vec({}), DimensionError);
  CHECK_THROWS_AS(vec({1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidArgumentError);
  CHECK_THROWS_AS(vec({std::numeric_limits<double>::infinity()}), InvalidArgumentError);
}

TEST_CASE("cosine similarity properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 2 + trial % 30;
    auto x = random_vector(rng, dim);
    auto y = random_vector(rng, dim);
    const Embedding ex(x);
    const Embedding ey(y);
    CHECK(std::abs(cosine_similarity(ex, ex) - 1.0) <= 1e-9);
    const double a = scale(rng);
    std::vector<double> ax = x;
    for (double& v : ax) v *= a;
    CHECK(std::abs(cosine_similarity(Embedding(ax), ey) - cosine_similarity(ex, ey)) <= 1e-9);
    const double c = cosine_similarity(ex, ey);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("softmax examples") {
  auto two = softmax(std::vector<double>{0, 0});
  CHECK(two[0] == doctest::Approx(0.5));
  CHECK(two[1] == doctest::Approx(0.5));
  for (double c : {-1000.0, 0.0, 3.5, 1e6}) {
    auto p = softmax(std::vector<double>{c, c, c});
    for (double v : p) CHECK(std::abs(v - 1.0 / 3.0) <= 1e-12);
  }
  auto q = softmax(std::vector<double>{std::log(1.0), std::log(3.0)});
  CHECK(std::abs(q[0] - 0.25) <= 1e-12);
  CHECK(std::abs(q[1] - 0.75) <= 1e-12);
  CHECK_THROWS_AS(softmax(std::vector<double>{}), EmptyInputError);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, std::nan("")}), InvalidArgumentError);
}

TEST_CASE("softmax properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + trial % 12);
    for (double& x : v) x = u(rng);
    const double shift = u(rng);
    std::vector<double> w = v;
    for (double& x : w) x += shift;
    auto p = softmax(v);
    auto q = softmax(w);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(std::abs(p[i] - q[i]) <= 1e-9);
      sum += p[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    auto arg = [](const std::vector<double>& xs) {
      return std::max_element(xs.begin(), xs.end()) - xs.begin();
    };
    CHECK(arg(p) == arg(v));
  }
}

TEST_CASE("end penalty") {
  CHECK(end_penalty(0) == 1.0);
  CHECK(end_penalty(1) == 0.5);
  CHECK(end_penalty(3) == 0.25);
  for (std::size_t n = 0; n < 1000; ++n) CHECK(end_penalty(n + 1) < end_penalty(n));
}

TEST_CASE("parse error line numbers") {
  CHECK(std::string(ParseError("bad", 3).what()) == "bad (line 3)");
  CHECK(std::string(ParseError("bad").what()) == "bad");
  CHECK(ParseError("bad", 7).line() == 7);
}

TEST_CASE("text helpers") {
  CHECK(canonicalize("  Dog   BARKING \t loudly ") == "dog barking loudly");
  CHECK(word_tokenize("Objects: dog, rain. This is") ==
        std::vector<std::string>{"Objects", ":", "dog", ",", "rain", ".", "This", "is"});
  CHECK(word_detokenize({"a", "dog", "barks", ".", "(", "x", ")"}) == "a dog barks. (x)");
  std::vector<std::string> seen;
  set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  warn("hello");
  set_warning_sink(nullptr);
  CHECK(seen == std::vector<std::string>{"hello"});
}
