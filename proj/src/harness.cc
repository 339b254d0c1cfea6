// SPDX-License-Identifier: Apache-2.0

#include "zsac/harness.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "zsac/text.h"

namespace zsac {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_document(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + path + ": " + e.what());
  }
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgumentError("bad number for " + what + ": \"" + s + "\"");
  }
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  const double v = parse_real(s, what);
  if (v < 0 || v != std::floor(v)) {
    throw InvalidArgumentError(what + " must be a non-negative integer, got \"" + s + "\"");
  }
  return static_cast<std::size_t>(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\n";
}

const std::vector<std::string> kAblationHeader = {"model",  "keyword_list", "magic_search", "decoding",
                                                  "bleu2",  "bleu3",        "meteor",       "cider",
                                                  "nlg_mean", "nlg_mean_x10"};
const std::vector<std::string> kSweepHeader = {"axis",   "value",    "bleu2",        "bleu3", "meteor",
                                               "cider",  "nlg_mean", "nlg_mean_x10", "best"};

std::vector<std::string> metric_fields(const MetricReport& r) {
  return {real(r.bleu2), real(r.bleu3), real(r.meteor), r.cider ? real(*r.cider) : std::string(),
          real(r.nlg_mean), real(r.nlg_mean * 10.0)};
}

MetricReport metrics_from_fields(const std::vector<std::string>& f, std::size_t at) {
  MetricReport r;
  r.bleu2 = parse_real(f.at(at), "bleu2");
  r.bleu3 = parse_real(f.at(at + 1), "bleu3");
  r.meteor = parse_real(f.at(at + 2), "meteor");
  r.included = {"bleu2", "bleu3", "meteor"};
  if (!f.at(at + 3).empty()) {
    r.cider = parse_real(f.at(at + 3), "cider");
    r.included.push_back("cider");
  }
  r.nlg_mean = parse_real(f.at(at + 4), "nlg_mean");
  return r;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& header) {
  if (t.header != header) throw ParseError("unexpected CSV header");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != header.size()) throw ParseError("wrong field count", i + 2);
  }
}

}  // namespace

void Manifest::validate(bool require_refs) const {
  std::set<std::string> seen;
  for (const auto& c : clips) {
    if (c.clip_id.empty()) throw InvalidArgumentError("manifest: empty clip_id");
    if (!seen.insert(c.clip_id).second) throw DuplicateIdError("manifest: duplicate clip_id " + c.clip_id);
    if (require_refs) {
      bool any = false;
      for (const auto& r : c.refs) any = any || !trim(r).empty();
      if (!any) throw MissingReferenceError("manifest: clip " + c.clip_id + " has no references");
    }
  }
}

std::vector<ReferenceSet> Manifest::reference_sets() const {
  std::vector<ReferenceSet> out;
  for (const auto& c : clips) out.push_back(ReferenceSet{c.clip_id, c.refs});
  return out;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      ClipEntry e;
      e.clip_id = j.at("clip_id").get<std::string>();
      e.audio = j.contains("audio") ? j.at("audio").get<std::string>() : e.clip_id;
      if (j.contains("refs")) e.refs = j.at("refs").get<std::vector<std::string>>();
      m.clips.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad manifest record: ") + e.what(), line_no);
    }
  }
  m.validate(false);
  return m;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& c : manifest.clips) {
    out << json{{"clip_id", c.clip_id}, {"audio", c.audio}, {"refs", c.refs}}.dump() << "\n";
  }
}

std::vector<ReferenceSet> load_references(const std::string& path) {
  json j = parse_document(path);
  if (!j.is_object()) throw ParseError("references file must be a JSON object");
  std::vector<ReferenceSet> out;
  for (const auto& [id, v] : j.items()) {
    ReferenceSet rs{id, {}};
    if (v.is_string()) {
      rs.references.push_back(v.get<std::string>());
    } else if (v.is_array()) {
      for (const auto& r : v) {
        if (!r.is_string()) throw ParseError("reference for " + id + " is not a string");
        rs.references.push_back(r.get<std::string>());
      }
    } else {
      throw ParseError("references for " + id + " must be a list of strings");
    }
    out.push_back(std::move(rs));
  }
  return out;
}

CandidateMap load_candidates(const std::string& path) {
  CandidateMap out;
  for (auto& rs : load_references(path)) {
    if (rs.references.size() != 1) {
      throw ParseError("candidate for " + rs.clip_id + " must be a single caption");
    }
    out[rs.clip_id] = rs.references.front();
  }
  return out;
}

void write_candidates(const std::string& path, const CandidateMap& candidates) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  json j = json::object();
  for (const auto& [id, c] : candidates) j[id] = json::array({c});
  out << j.dump(1) << "\n";
}

BatchResult run_batch(const Manifest& manifest, const Backends& backends, const KeywordList& keywords,
                      const PromptTemplate& tmpl, const DecodeConfig& cfg, std::size_t l,
                      const BatchOptions& options) {
  if (manifest.clips.empty()) throw EmptyInputError("run_batch: empty manifest");
  manifest.validate(true);
  cfg.validate();
  tmpl.validate();
  if (options.mode == DecodeMode::kGuided && l > keywords.size()) {
    throw InvalidArgumentError("l = " + std::to_string(l) + " exceeds keyword list size " +
                               std::to_string(keywords.size()));
  }
  if (!backends.lm || (options.mode == DecodeMode::kGuided && !backends.matcher)) {
    throw InvalidArgumentError("run_batch: missing backend");
  }

  const std::size_t n = manifest.clips.size();
  std::vector<std::optional<CaptionResult>> results(n);
  std::vector<std::string> errors(n);

  auto work = [&](std::size_t i) {
    const ClipEntry& clip = manifest.clips[i];
    try {
      if (options.mode == DecodeMode::kGreedy) {
        results[i] = decode_greedy(*backends.lm, tmpl, cfg);
      } else {
        results[i] = decode(clip.audio, *backends.matcher, *backends.lm, keywords, tmpl, cfg, l);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  BatchResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = manifest.clips[i].clip_id;
    if (results[i]) {
      out.captions[id] = results[i]->text;
      out.results.emplace(id, std::move(*results[i]));
    } else {
      out.captions[id] = "";
      out.failures[id] = errors[i];
      warn("clip " + id + " failed: " + errors[i]);
    }
  }
  out.report = evaluate(out.captions, index_references(manifest.reference_sets()));
  return out;
}

std::vector<AblationRow> run_ablation(const Manifest& manifest, const Backends& backends,
                                      const std::vector<KeywordVariant>& variants,
                                      const PromptTemplate& tmpl, const DecodeConfig& cfg,
                                      std::size_t l, const AblationOptions& options) {
  if (variants.empty()) throw EmptyInputError("run_ablation: no keyword variants");
  std::vector<AblationRow> rows;
  BatchOptions batch;
  batch.jobs = options.jobs;
  for (const auto& v : variants) {
    const KeywordList empty;
    const KeywordList& list = v.list ? *v.list : empty;
    const std::size_t use_l = v.list ? std::min(l, list.size()) : 0;
    for (bool magic : {true, false}) {
      DecodeConfig c = cfg;
      if (!magic) c.w_magic = 0.0;
      BatchResult r = run_batch(manifest, backends, list, tmpl, c, use_l, batch);
      rows.push_back(AblationRow{backends.name, v.name, magic, magic ? "magic" : "no-magic", r.report});
    }
  }
  if (options.include_greedy_baseline) {
    batch.mode = DecodeMode::kGreedy;
    BatchResult r = run_batch(manifest, backends, KeywordList{}, tmpl, cfg, 0, batch);
    rows.push_back(AblationRow{backends.name, "None", false, "greedy", r.report});
  }
  return rows;
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kWConfidence: return "w_confidence";
    case SweepAxis::kWDegeneration: return "w_degeneration";
    case SweepAxis::kWMagic: return "w_magic";
    case SweepAxis::kTau: return "tau";
    case SweepAxis::kL: return "l";
    case SweepAxis::kK: return "k";
    case SweepAxis::kKeywordList: return "keyword_list";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kWConfidence, SweepAxis::kWDegeneration, SweepAxis::kWMagic,
                      SweepAxis::kTau, SweepAxis::kL, SweepAxis::kK, SweepAxis::kKeywordList}) {
    if (axis_name(a) == name) return a;
  }
  throw InvalidArgumentError("unknown sweep axis \"" + name + "\"");
}

std::vector<SweepRow> run_sweep(const Manifest& manifest, const Backends& backends,
                                const KeywordCatalog& catalog, const PromptTemplate& tmpl,
                                const SweepSpec& spec, std::size_t jobs) {
  if (spec.values.empty()) throw InvalidArgumentError("sweep: no values");

  struct Cell {
    DecodeConfig cfg;
    std::size_t l;
    std::optional<KeywordList> list;
  };
  auto lookup = [&](const std::string& name) {
    auto it = catalog.find(name);
    if (it == catalog.end()) throw InvalidArgumentError("sweep: unknown keyword list \"" + name + "\"");
    return it->second;
  };

  std::vector<Cell> cells;
  for (const std::string& value : spec.values) {
    Cell cell{spec.fixed, spec.l, std::nullopt};
    if (spec.axis != SweepAxis::kKeywordList) cell.list = lookup(spec.keyword_list);
    switch (spec.axis) {
      case SweepAxis::kWConfidence: cell.cfg.w_confidence = parse_real(value, "w_confidence"); break;
      case SweepAxis::kWDegeneration: cell.cfg.w_degeneration = parse_real(value, "w_degeneration"); break;
      case SweepAxis::kWMagic: cell.cfg.w_magic = parse_real(value, "w_magic"); break;
      case SweepAxis::kTau: cell.cfg.tau = parse_real(value, "tau"); break;
      case SweepAxis::kK: cell.cfg.k = parse_count(value, "k"); break;
      case SweepAxis::kL: cell.l = parse_count(value, "l"); break;
      case SweepAxis::kKeywordList: cell.list = lookup(value); break;
    }
    if (!cell.list) {
      if (spec.axis == SweepAxis::kL && cell.l > 0) {
        throw InvalidArgumentError("sweep: l > 0 needs a keyword list");
      }
      cell.l = 0;
    } else if (cell.l > cell.list->size()) {
      throw InvalidArgumentError("sweep: l = " + std::to_string(cell.l) + " exceeds keyword list size " +
                                 std::to_string(cell.list->size()));
    }
    cell.cfg.validate();
    cells.push_back(std::move(cell));
  }

  std::vector<SweepRow> rows;
  BatchOptions batch;
  batch.jobs = jobs;
  std::size_t best = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const KeywordList empty;
    const Cell& c = cells[i];
    BatchResult r = run_batch(manifest, backends, c.list ? *c.list : empty, tmpl, c.cfg, c.l, batch);
    rows.push_back(SweepRow{axis_name(spec.axis), spec.values[i], r.report, false});
    if (r.report.nlg_mean > rows[best].report.nlg_mean) best = i;
  }
  rows[best].best = true;
  return rows;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::string out = csv_line(kAblationHeader);
  for (const auto& r : rows) {
    std::vector<std::string> f = {r.model, r.keyword_list, r.magic ? "yes" : "no", r.decoding};
    auto m = metric_fields(r.report);
    f.insert(f.end(), m.begin(), m.end());
    out += csv_line(f);
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = csv_line(kSweepHeader);
  for (const auto& r : rows) {
    std::vector<std::string> f = {r.axis, r.value};
    auto m = metric_fields(r.report);
    f.insert(f.end(), m.begin(), m.end());
    f.push_back(r.best ? "*" : "");
    out += csv_line(f);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  if (quoted) throw ParseError("unterminated quoted CSV field");
  CsvTable t;
  if (records.empty()) throw ParseError("empty CSV");
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

std::vector<AblationRow> ablation_from_csv(const std::string& text) {
  CsvTable t = parse_csv(text);
  expect_header(t, kAblationHeader);
  std::vector<AblationRow> rows;
  for (const auto& f : t.rows) {
    rows.push_back(AblationRow{f[0], f[1], f[2] == "yes", f[3], metrics_from_fields(f, 4)});
  }
  return rows;
}

std::vector<SweepRow> sweep_from_csv(const std::string& text) {
  CsvTable t = parse_csv(text);
  expect_header(t, kSweepHeader);
  std::vector<SweepRow> rows;
  for (const auto& f : t.rows) {
    rows.push_back(SweepRow{f[0], f[1], metrics_from_fields(f, 2), f[8] == "*"});
  }
  return rows;
}

std::string config_to_json(const DecodeConfig& cfg, const PromptTemplate& tmpl, int indent) {
  json j = {{"k", cfg.k},
            {"w_confidence", cfg.w_confidence},
            {"w_degeneration", cfg.w_degeneration},
            {"w_magic", cfg.w_magic},
            {"tau", cfg.tau},
            {"w_end", cfg.w_end},
            {"max_tokens", cfg.max_tokens},
            {"end_tokens", cfg.end_tokens},
            {"magic_includes_prompt", cfg.magic_includes_prompt},
            {"token_pair_magic", cfg.token_pair_magic},
            {"keyword_embed_template",
             cfg.keyword_embed_template ? json(*cfg.keyword_embed_template) : json(nullptr)},
            {"keyword_header", tmpl.keyword_header},
            {"base_prompt", tmpl.base_prompt},
            {"keyword_separator", tmpl.keyword_separator},
            {"glue", tmpl.glue}};
  return j.dump(indent);
}

}  // namespace zsac
