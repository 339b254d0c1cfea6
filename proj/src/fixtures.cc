// SPDX-License-Identifier: Apache-2.0

#include "zsac/fixtures.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "zsac/text.h"

namespace zsac {

using nlohmann::json;

namespace {

constexpr double kSumTolerance = 1e-6;
// Reserved for unlisted tokens when a row already carries all the mass.
constexpr double kReservedMass = 1e-9;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
}

template <typename T>
T get_field(const json& j, const char* key, std::size_t line_no) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string("missing field \"") + key + "\"", line_no);
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("bad type for field \"") + key + "\"", line_no);
  }
}

void merge_into(FixtureStore& dst, FixtureStore&& src, bool first) {
  if (first) {
    dst.fallback_seed = src.fallback_seed;
    dst.dim = src.dim;
  } else if (src.dim != dst.dim) {
    throw DimensionError("fixture files disagree on dim: " + std::to_string(dst.dim) + " vs " +
                         std::to_string(src.dim));
  }
  for (auto& [id, e] : src.audio) {
    if (!dst.audio.emplace(id, std::move(e)).second) {
      throw DuplicateIdError("duplicate clip_id across files: " + id);
    }
  }
  for (auto& [id, e] : src.text) {
    if (!dst.text.emplace(id, std::move(e)).second) {
      throw DuplicateIdError("duplicate text id across files: " + id);
    }
  }
}

}  // namespace

FixtureStore load_embedding_fixtures(const std::string& path) {
  std::ifstream in = open_input(path);
  FixtureStore store;
  std::optional<std::size_t> header_dim;
  bool seen_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j = parse_line(line, line_no);
    if (!seen_header) {
      if (get_field<std::string>(j, "schema", line_no) != "emb/1") {
        throw ParseError("expected schema \"emb/1\"", line_no);
      }
      store.fallback_seed = static_cast<std::uint64_t>(get_field<std::int64_t>(j, "fallback_seed", line_no));
      if (j.contains("dim")) {
        auto d = get_field<std::int64_t>(j, "dim", line_no);
        if (d < 2) throw ParseError("header dim must be >= 2", line_no);
        header_dim = static_cast<std::size_t>(d);
      }
      seen_header = true;
      continue;
    }

    const auto id = get_field<std::string>(j, "id", line_no);
    const auto kind = get_field<std::string>(j, "kind", line_no);
    const auto dim = get_field<std::int64_t>(j, "dim", line_no);
    auto values = get_field<std::vector<double>>(j, "v", line_no);
    if (kind != "audio" && kind != "text") {
      throw ParseError("kind must be \"audio\" or \"text\", got \"" + kind + "\"", line_no);
    }
    if (dim < 1 || static_cast<std::size_t>(dim) != values.size()) {
      throw DimensionError("record dim " + std::to_string(dim) + " does not match " +
                           std::to_string(values.size()) + " values (line " +
                           std::to_string(line_no) + ")");
    }
    const std::size_t expected = store.dim ? store.dim : header_dim.value_or(values.size());
    if (values.size() != expected) {
      throw DimensionError("record dim " + std::to_string(values.size()) + " differs from " +
                           std::to_string(expected) + " (line " + std::to_string(line_no) + ")");
    }
    store.dim = expected;

    Embedding emb(std::move(values));
    if (kind == "audio") {
      if (!store.audio.emplace(id, std::move(emb)).second) {
        throw DuplicateIdError("duplicate clip_id \"" + id + "\" (line " + std::to_string(line_no) + ")");
      }
    } else {
      if (!store.text.emplace(canonicalize(id), std::move(emb)).second) {
        throw DuplicateIdError("duplicate text id \"" + id + "\" (line " + std::to_string(line_no) + ")");
      }
    }
  }
  if (!seen_header) throw ParseError("missing emb/1 header in " + path);
  if (store.dim == 0) {
    if (!header_dim) throw ParseError("no records and no header dim in " + path);
    store.dim = *header_dim;
  }
  return store;
}

FixtureStore load_embedding_fixtures(const std::vector<std::string>& paths) {
  if (paths.empty()) throw EmptyInputError("no embedding fixture files given");
  FixtureStore merged;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    merge_into(merged, load_embedding_fixtures(paths[i]), i == 0);
  }
  return merged;
}

void write_embedding_fixtures(const std::string& path, const FixtureStore& store) {
  std::ofstream out = open_output(path);
  json header = {{"schema", "emb/1"},
                 {"fallback_seed", static_cast<std::int64_t>(store.fallback_seed)},
                 {"dim", store.dim}};
  out << header.dump() << "\n";
  auto write = [&](const std::string& id, const char* kind, const Embedding& e) {
    json rec = {{"id", id},
                {"kind", kind},
                {"dim", e.dim()},
                {"v", std::vector<double>(e.values().begin(), e.values().end())}};
    out << rec.dump() << "\n";
  };
  for (const auto& [id, e] : store.audio) write(id, "audio", e);
  for (const auto& [id, e] : store.text) write(id, "text", e);
  if (!out) throw IoError("failed writing " + path);
}

FixtureMatcher::FixtureMatcher(FixtureStore store, std::string name)
    : store_(std::move(store)), name_(std::move(name)), fallback_(store_.fallback_seed, store_.dim) {}

Embedding FixtureMatcher::embed_audio(std::string_view clip_ref) const {
  auto it = store_.audio.find(std::string(clip_ref));
  if (it == store_.audio.end()) {
    throw UnknownClipError("no audio embedding for clip \"" + std::string(clip_ref) + "\"");
  }
  return it->second;
}

Embedding FixtureMatcher::embed_text(std::string_view text) const {
  std::string key = canonicalize(text);
  if (auto it = store_.text.find(key); it != store_.text.end()) return it->second;
  return fallback_cache_.get_or_compute(key, [&] { return fallback_.embed(text); });
}

LmTable load_lm_table(const std::string& path) {
  std::ifstream in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed lm/1 document: ") + e.what());
  }
  if (get_field<std::string>(j, "schema", 0) != "lm/1") {
    throw ParseError("expected schema \"lm/1\" in " + path);
  }
  LmTable table;
  const auto granularity = get_field<std::string>(j, "granularity", 0);
  if (granularity == "word") {
    table.granularity = Granularity::kWord;
  } else if (granularity == "subword") {
    table.granularity = Granularity::kSubword;
  } else {
    throw ParseError("granularity must be \"word\" or \"subword\"");
  }
  table.vocab = get_field<std::vector<std::string>>(j, "vocab", 0);
  const json& ngrams = j.contains("ngrams") ? j.at("ngrams") : json::object();
  if (!ngrams.is_object()) throw ParseError("\"ngrams\" must be an object");
  for (const auto& [prefix, row] : ngrams.items()) {
    if (!row.is_object()) throw ParseError("ngram row \"" + prefix + "\" must be an object");
    auto& entries = table.ngrams[prefix];
    for (const auto& [token, prob] : row.items()) {
      if (!prob.is_number()) {
        throw ParseError("probability for \"" + token + "\" under \"" + prefix + "\" is not a number");
      }
      entries.emplace_back(token, prob.get<double>());
    }
  }
  return table;
}

void write_lm_table(const std::string& path, const LmTable& table) {
  json ngrams = json::object();
  for (const auto& [prefix, entries] : table.ngrams) {
    json row = json::object();
    for (const auto& [token, p] : entries) row[token] = p;
    ngrams[prefix] = std::move(row);
  }
  json doc = {{"schema", "lm/1"},
              {"granularity", table.granularity == Granularity::kWord ? "word" : "subword"},
              {"vocab", table.vocab},
              {"ngrams", std::move(ngrams)}};
  std::ofstream out = open_output(path);
  out << doc.dump(1) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

TableLanguageModel::TableLanguageModel(const LmTable& table, std::string name)
    : granularity_(table.granularity), name_(std::move(name)), vocab_(table.vocab) {
  if (vocab_.empty()) throw EmptyInputError("lm/1 vocabulary is empty");
  for (TokenId id = 0; id < vocab_.size(); ++id) {
    if (!ids_.emplace(vocab_[id], id).second) {
      throw DuplicateIdError("duplicate vocabulary entry \"" + vocab_[id] + "\"");
    }
    if (vocab_[id] == "<eos>") eos_ = id;
    if (vocab_[id] != "<bos>" && vocab_[id] != "<unk>") predictable_.push_back(id);
  }
  if (predictable_.empty()) throw EmptyInputError("lm/1 vocabulary has no predictable tokens");

  for (const auto& [prefix, entries] : table.ngrams) {
    Row row;
    row.is_listed.assign(vocab_.size(), false);
    double sum = 0.0;
    for (const auto& [surface, p] : entries) {
      auto it = ids_.find(surface);
      if (it == ids_.end() || vocab_[it->second] == "<bos>" || vocab_[it->second] == "<unk>") {
        warn("lm/1 row \"" + prefix + "\": token \"" + surface + "\" is not a predictable vocabulary entry; ignored");
        continue;
      }
      if (!(p > 0.0) || p > 1.0 || !std::isfinite(p)) {
        throw ParseError("probability of \"" + surface + "\" under \"" + prefix + "\" must be in (0, 1]");
      }
      if (row.is_listed[it->second]) {
        throw DuplicateIdError("token \"" + surface + "\" listed twice under \"" + prefix + "\"");
      }
      row.is_listed[it->second] = true;
      row.listed.push_back(TokenProb{Token{it->second, surface}, p});
      sum += p;
    }
    if (sum > 1.0 + kSumTolerance) {
      throw ParseError("row \"" + prefix + "\" sums to " + std::to_string(sum) + " > 1");
    }
    const std::size_t unlisted = predictable_.size() - row.listed.size();
    if (unlisted == 0) {
      for (auto& tp : row.listed) tp.probability /= sum;
    } else {
      double residual = 1.0 - sum;
      if (residual < kReservedMass) {
        const double scale = (1.0 - kReservedMass) / sum;
        for (auto& tp : row.listed) tp.probability *= scale;
        residual = kReservedMass;
      }
      row.residual_share = residual / static_cast<double>(unlisted);
    }
    std::sort(row.listed.begin(), row.listed.end(), [](const TokenProb& a, const TokenProb& b) {
      if (a.probability != b.probability) return a.probability > b.probability;
      return a.token.id < b.token.id;
    });

    std::string key = normalize_key(prefix);
    const std::size_t key_tokens =
        granularity_ == Granularity::kWord ? split_whitespace(key).size() : key.size();
    max_key_tokens_ = std::max(max_key_tokens_, key_tokens);
    if (!rows_.emplace(std::move(key), std::move(row)).second) {
      throw DuplicateIdError("ngram prefixes collide after normalization: \"" + prefix + "\"");
    }
  }
}

std::string TableLanguageModel::normalize_key(std::string_view key) const {
  return granularity_ == Granularity::kWord ? canonicalize(key) : std::string(key);
}

std::vector<Token> TableLanguageModel::encode(std::string_view text) const {
  std::vector<Token> out;
  if (granularity_ == Granularity::kWord) {
    for (const std::string& word : word_tokenize(text)) {
      auto it = ids_.find(word);
      if (it == ids_.end()) it = ids_.find(canonicalize(word));
      if (it != ids_.end()) {
        out.push_back(Token{it->second, vocab_[it->second]});
      } else {
        out.push_back(Token{kUnknown, word});
      }
    }
    return out;
  }

  std::size_t max_len = 0;
  for (TokenId id : predictable_) max_len = std::max(max_len, vocab_[id].size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_len, text.size() - i); len > 0; --len) {
      auto it = ids_.find(std::string(text.substr(i, len)));
      if (it != ids_.end() && it->second != eos_) {
        out.push_back(Token{it->second, it->first});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.push_back(Token{kUnknown, std::string(1, text[i])});
      ++i;
    }
  }
  return out;
}

std::string TableLanguageModel::decode(std::span<const Token> tokens) const {
  std::vector<std::string> pieces;
  for (const Token& t : tokens) {
    if (t.id != kUnknown && (vocab_[t.id] == "<bos>" || vocab_[t.id] == "<eos>")) continue;
    pieces.push_back(t.surface);
  }
  if (granularity_ == Granularity::kWord) return word_detokenize(pieces);
  std::string out;
  for (const auto& p : pieces) out += p;
  return out;
}

const TableLanguageModel::Row* TableLanguageModel::find_row(std::span<const Token> prefix) const {
  // Context pieces, skipping <bos>.
  std::vector<std::string_view> pieces;
  for (const Token& t : prefix) {
    if (t.id != kUnknown && vocab_[t.id] == "<bos>") continue;
    pieces.push_back(t.surface);
  }
  const bool word = granularity_ == Granularity::kWord;
  std::string key;
  const Row* best = nullptr;
  if (auto it = rows_.find(""); it != rows_.end()) best = &it->second;
  // Grow the suffix one piece at a time; the longest hit wins.
  for (std::size_t n = 1; n <= pieces.size(); ++n) {
    const std::string_view piece = pieces[pieces.size() - n];
    std::string next = word ? canonicalize(piece) : std::string(piece);
    if (word && !key.empty()) next += ' ';
    key.insert(0, next);
    if ((word ? n : key.size()) > max_key_tokens_) break;
    if (auto it = rows_.find(key); it != rows_.end()) best = &it->second;
  }
  return best;
}

std::vector<TokenProb> TableLanguageModel::top_k_next(std::span<const Token> prefix,
                                                      std::size_t k) const {
  const Row* row = find_row(prefix);
  const std::size_t n = std::min(k, predictable_.size());
  std::vector<TokenProb> out;
  out.reserve(n);
  if (row == nullptr) {
    const double p = 1.0 / static_cast<double>(predictable_.size());
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(TokenProb{Token{predictable_[i], vocab_[predictable_[i]]}, p});
    }
    return out;
  }
  // Merge listed entries with the unlisted ones (equal share, ascending id).
  std::size_t li = 0;
  std::size_t ui = 0;
  auto next_unlisted = [&]() {
    while (ui < predictable_.size() && row->is_listed[predictable_[ui]]) ++ui;
  };
  next_unlisted();
  while (out.size() < n) {
    const bool have_listed = li < row->listed.size();
    const bool have_unlisted = ui < predictable_.size();
    bool take_listed = have_listed;
    if (have_listed && have_unlisted) {
      const TokenProb& l = row->listed[li];
      take_listed = l.probability > row->residual_share ||
                    (l.probability == row->residual_share && l.token.id < predictable_[ui]);
    }
    if (take_listed) {
      out.push_back(row->listed[li++]);
    } else {
      TokenId id = predictable_[ui++];
      out.push_back(TokenProb{Token{id, vocab_[id]}, row->residual_share});
      next_unlisted();
    }
  }
  return out;
}

std::pair<std::shared_ptr<AudioTextMatcher>, std::shared_ptr<LanguageModel>> load_fixtures(
    const std::string& embeddings_path, const std::string& lm_path) {
  auto matcher = std::make_shared<FixtureMatcher>(load_embedding_fixtures(embeddings_path));
  auto lm = std::make_shared<TableLanguageModel>(load_lm_table(lm_path));
  return {matcher, lm};
}

std::string validate_fixture_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string first;
  while (std::getline(in, first) && trim(first).empty()) {
  }
  in.close();
  // emb/1 headers are one-line records; lm/1 is a (possibly pretty
  // printed) single document.
  if (first.find("emb/1") != std::string::npos) {
    FixtureStore store = load_embedding_fixtures(path);
    return "emb/1 ok: dim " + std::to_string(store.dim) + ", " + std::to_string(store.audio.size()) +
           " audio, " + std::to_string(store.text.size()) + " text records";
  }
  LmTable table = load_lm_table(path);
  TableLanguageModel lm(table);
  return "lm/1 ok: vocab " + std::to_string(table.vocab.size()) + ", " +
         std::to_string(table.ngrams.size()) + " rows";
}

}  // namespace zsac
