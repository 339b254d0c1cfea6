// SPDX-License-Identifier: Apache-2.0

#include "zsac/metrics.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "zsac/text.h"

namespace zsac {

namespace {

constexpr int kCiderMaxN = 4;

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                    tokens.begin() + static_cast<long>(i) + n)] += 1;
  }
  return counts;
}

const ReferenceSet& refs_for(const ReferenceMap& refs, const std::string& clip_id) {
  auto it = refs.find(clip_id);
  if (it == refs.end() || it->second.references.empty()) {
    throw MissingReferenceError("no references for clip \"" + clip_id + "\"");
  }
  return it->second;
}

struct Alignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (candidate, reference) positions
};

// Exact stage then stem stage. Within a stage, a candidate word prefers the
// reference position right after its predecessor's match, so runs stay
// contiguous; otherwise the leftmost free position is used.
Alignment align_words(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::vector<long> cand_to_ref(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  auto run_stage = [&](auto&& same) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (cand_to_ref[i] >= 0) continue;
      long chosen = -1;
      if (i > 0 && cand_to_ref[i - 1] >= 0) {
        const auto next = static_cast<std::size_t>(cand_to_ref[i - 1] + 1);
        if (next < ref.size() && !ref_used[next] && same(cand[i], ref[next])) {
          chosen = static_cast<long>(next);
        }
      }
      for (std::size_t j = 0; chosen < 0 && j < ref.size(); ++j) {
        if (!ref_used[j] && same(cand[i], ref[j])) chosen = static_cast<long>(j);
      }
      if (chosen >= 0) {
        cand_to_ref[i] = chosen;
        ref_used[static_cast<std::size_t>(chosen)] = true;
      }
    }
  };
  run_stage([](const std::string& a, const std::string& b) { return a == b; });
  run_stage([](const std::string& a, const std::string& b) { return meteor_stem(a) == meteor_stem(b); });

  Alignment out;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (cand_to_ref[i] >= 0) out.pairs.emplace_back(i, static_cast<std::size_t>(cand_to_ref[i]));
  }
  return out;
}

using TfIdf = std::map<std::vector<std::string>, double>;

struct CiderVec {
  std::array<TfIdf, kCiderMaxN> vec;
  std::array<double, kCiderMaxN> norm{};
};

CiderVec cider_vector(const std::vector<std::string>& tokens,
                      const std::map<std::vector<std::string>, int>& df, double log_n) {
  CiderVec out;
  for (int n = 1; n <= kCiderMaxN; ++n) {
    for (const auto& [gram, count] : count_ngrams(tokens, n)) {
      auto it = df.find(gram);
      const double d = it == df.end() ? 1.0 : std::max(1.0, static_cast<double>(it->second));
      const double w = static_cast<double>(count) * (log_n - std::log(d));
      out.vec[n - 1][gram] = w;
      out.norm[n - 1] += w * w;
    }
    out.norm[n - 1] = std::sqrt(out.norm[n - 1]);
  }
  return out;
}

double cider_sim(const TfIdf& a, double norm_a, const TfIdf& b, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [gram, w] : a) {
    if (auto it = b.find(gram); it != b.end()) dot += w * it->second;
  }
  return dot / (norm_a * norm_b);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::vector<std::string> metric_tokenize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    const bool inner = i > 0 && i + 1 < text.size() &&
                       std::isalnum(static_cast<unsigned char>(text[i - 1])) &&
                       std::isalnum(static_cast<unsigned char>(text[i + 1]));
    if (std::ispunct(c) && !((c == '\'' || c == '-') && inner)) {
      cleaned.push_back(' ');
    } else {
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return split_whitespace(cleaned);
}

ReferenceMap index_references(const std::vector<ReferenceSet>& refs) {
  ReferenceMap out;
  for (const auto& r : refs) {
    const bool any = std::any_of(r.references.begin(), r.references.end(),
                                 [](const std::string& s) { return !trim(s).empty(); });
    if (!any) throw MissingReferenceError("clip \"" + r.clip_id + "\" has no non-empty reference");
    if (!out.emplace(r.clip_id, r).second) {
      throw DuplicateIdError("duplicate reference set for clip \"" + r.clip_id + "\"");
    }
  }
  return out;
}

double bleu_n(const CandidateMap& candidates, const ReferenceMap& refs, int n,
              const BleuOptions& options) {
  if (n < 1 || n > 4) throw InvalidArgumentError("bleu_n: n must be in 1..4");
  std::vector<double> matches(static_cast<std::size_t>(n), 0.0);
  std::vector<double> totals(static_cast<std::size_t>(n), 0.0);
  double cand_len = 0.0;
  double ref_len = 0.0;

  for (const auto& [clip_id, caption] : candidates) {
    const ReferenceSet& rs = refs_for(refs, clip_id);
    const auto cand = metric_tokenize(caption);
    std::vector<std::vector<std::string>> ref_tokens;
    for (const auto& r : rs.references) ref_tokens.push_back(metric_tokenize(r));

    cand_len += static_cast<double>(cand.size());
    // Closest reference length; ties go to the shorter one.
    std::size_t best = ref_tokens.front().size();
    for (const auto& r : ref_tokens) {
      const auto d = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    ref_len += static_cast<double>(best);

    for (int k = 1; k <= n; ++k) {
      const NgramCounts cand_counts = count_ngrams(cand, k);
      NgramCounts max_ref;
      for (const auto& r : ref_tokens) {
        for (const auto& [gram, c] : count_ngrams(r, k)) max_ref[gram] = std::max(max_ref[gram], c);
      }
      for (const auto& [gram, c] : cand_counts) {
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) matches[k - 1] += std::min(c, it->second);
        totals[k - 1] += c;
      }
    }
  }

  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    double m = matches[k];
    if (totals[k] == 0.0) return 0.0;
    if (m == 0.0) {
      if (options.epsilon <= 0.0) return 0.0;
      m = options.epsilon;
    }
    log_sum += std::log(m / totals[k]);
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return bp * std::exp(log_sum / n);
}

std::string meteor_stem(const std::string& word) {
  static const char* const kSuffixes[] = {"ing", "es", "ed", "s"};
  for (const char* suffix : kSuffixes) {
    const std::string s(suffix);
    if (word.size() >= s.size() + 3 && word.compare(word.size() - s.size(), s.size(), s) == 0) {
      return word.substr(0, word.size() - s.size());
    }
  }
  return word;
}

double meteor_sentence(const std::string& candidate, const std::string& reference) {
  const auto cand = metric_tokenize(candidate);
  const auto ref = metric_tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  const Alignment a = align_words(cand, ref);
  const double m = static_cast<double>(a.pairs.size());
  if (m == 0.0) return 0.0;

  std::size_t chunks = 1;
  for (std::size_t i = 1; i < a.pairs.size(); ++i) {
    const auto& prev = a.pairs[i - 1];
    const auto& cur = a.pairs[i];
    if (!(cur.first == prev.first + 1 && cur.second == prev.second + 1)) ++chunks;
  }
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

double meteor(const CandidateMap& candidates, const ReferenceMap& refs,
              std::map<std::string, double>* per_clip) {
  if (candidates.empty()) throw EmptyInputError("meteor: no candidates");
  double total = 0.0;
  for (const auto& [clip_id, caption] : candidates) {
    double best = 0.0;
    for (const auto& r : refs_for(refs, clip_id).references) {
      best = std::max(best, meteor_sentence(caption, r));
    }
    if (per_clip) (*per_clip)[clip_id] = best;
    total += best;
  }
  return total / static_cast<double>(candidates.size());
}

double cider(const CandidateMap& candidates, const ReferenceMap& refs,
             std::map<std::string, double>* per_clip) {
  if (candidates.size() < 2) {
    throw InsufficientCorpusError("cider needs at least 2 clips, got " + std::to_string(candidates.size()));
  }
  std::map<std::string, std::vector<std::vector<std::string>>> ref_tokens;
  std::map<std::vector<std::string>, int> df;
  for (const auto& [clip_id, caption] : candidates) {
    auto& toks = ref_tokens[clip_id];
    std::set<std::vector<std::string>> grams;
    for (const auto& r : refs_for(refs, clip_id).references) {
      toks.push_back(metric_tokenize(r));
      for (int n = 1; n <= kCiderMaxN; ++n) {
        for (const auto& [gram, c] : count_ngrams(toks.back(), n)) grams.insert(gram);
      }
    }
    for (const auto& g : grams) df[g] += 1;
  }

  const double log_n = std::log(static_cast<double>(candidates.size()));
  double total = 0.0;
  for (const auto& [clip_id, caption] : candidates) {
    const CiderVec cv = cider_vector(metric_tokenize(caption), df, log_n);
    const auto& toks = ref_tokens[clip_id];
    std::array<double, kCiderMaxN> score{};
    for (const auto& r : toks) {
      const CiderVec rv = cider_vector(r, df, log_n);
      for (int n = 0; n < kCiderMaxN; ++n) score[n] += cider_sim(cv.vec[n], cv.norm[n], rv.vec[n], rv.norm[n]);
    }
    double mean = 0.0;
    for (double s : score) mean += s;
    mean /= kCiderMaxN;
    mean /= static_cast<double>(toks.size());
    mean *= 10.0;
    if (per_clip) (*per_clip)[clip_id] = mean;
    total += mean;
  }
  return total / static_cast<double>(candidates.size());
}

NlgMean nlg_mean(const std::map<std::string, std::optional<double>>& metrics) {
  NlgMean out;
  double sum = 0.0;
  for (const auto& [name, value] : metrics) {
    if (!value) continue;
    sum += *value;
    out.included.push_back(name);
  }
  if (out.included.empty()) throw EmptyInputError("nlg_mean: no metrics present");
  out.value = sum / static_cast<double>(out.included.size());
  return out;
}

double nlg_mean(const std::vector<double>& values) {
  if (values.empty()) throw EmptyInputError("nlg_mean: no metrics present");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

MetricReport evaluate(const CandidateMap& candidates, const ReferenceMap& refs) {
  if (candidates.empty()) throw EmptyInputError("evaluate: no candidates");
  MetricReport report;
  report.bleu2 = bleu_n(candidates, refs, 2);
  report.bleu3 = bleu_n(candidates, refs, 3);
  std::map<std::string, double> meteor_clip;
  report.meteor = meteor(candidates, refs, &meteor_clip);
  std::map<std::string, double> cider_clip;
  if (candidates.size() >= 2) report.cider = cider(candidates, refs, &cider_clip);

  for (const auto& [clip_id, caption] : candidates) {
    CandidateMap one = {{clip_id, caption}};
    ClipScores s;
    s.bleu2 = bleu_n(one, refs, 2);
    s.bleu3 = bleu_n(one, refs, 3);
    s.meteor = meteor_clip[clip_id];
    if (report.cider) s.cider = cider_clip[clip_id];
    report.per_clip[clip_id] = s;
  }

  // Fixed basket order.
  std::vector<double> values = {report.bleu2, report.bleu3, report.meteor};
  report.included = {"bleu2", "bleu3", "meteor"};
  if (report.cider) {
    values.push_back(*report.cider);
    report.included.push_back("cider");
  }
  report.nlg_mean = nlg_mean(values);
  return report;
}

std::string report_to_json(const MetricReport& report, int indent) {
  using nlohmann::json;
  json per_clip = json::object();
  for (const auto& [id, s] : report.per_clip) {
    json row = {{"bleu2", s.bleu2}, {"bleu3", s.bleu3}, {"meteor", s.meteor}};
    row["cider"] = s.cider ? json(*s.cider) : json(nullptr);
    per_clip[id] = std::move(row);
  }
  json doc = {{"bleu2", report.bleu2},
              {"bleu3", report.bleu3},
              {"meteor", report.meteor},
              {"cider", report.cider ? json(*report.cider) : json(nullptr)},
              {"nlg_mean", report.nlg_mean},
              {"nlg_mean_x10", report.nlg_mean * 10.0},
              {"basket", report.included},
              {"per_clip", std::move(per_clip)}};
  return doc.dump(indent);
}

std::string report_to_table(const MetricReport& report) {
  std::ostringstream out;
  out << "metric        value\n";
  out << "BLEU-2        " << fmt(report.bleu2) << "\n";
  out << "BLEU-3        " << fmt(report.bleu3) << "\n";
  out << "METEOR        " << fmt(report.meteor) << "\n";
  out << "CIDEr         " << (report.cider ? fmt(*report.cider) : std::string("n/a")) << "\n";
  out << "NLG mean      " << fmt(report.nlg_mean) << "\n";
  out << "NLG mean x10  " << fmt(report.nlg_mean * 10.0) << "\n";
  out << "basket:";
  for (const auto& m : report.included) out << " " << m;
  out << "\n";
  return out.str();
}

}  // namespace zsac
