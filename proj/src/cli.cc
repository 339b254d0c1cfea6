// SPDX-License-Identifier: Apache-2.0

#include "zsac/cli.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "zsac/fixtures.h"
#include "zsac/harness.h"
#include "zsac/keywords.h"
#include "zsac/text.h"
#include "zsac/toy_world.h"

namespace zsac::cli {

namespace {

using nlohmann::json;

class UsageError : public Error { using Error::Error; };

// Options shared by every command that decodes.
struct DecodeFlags {
  std::optional<std::size_t> k;
  std::optional<double> w_confidence;
  std::optional<double> w_degeneration;
  std::optional<double> w_magic;
  std::optional<double> tau;
  std::optional<double> w_end;
  std::optional<std::size_t> max_tokens;
  std::vector<std::string> end_tokens;
  std::optional<double> paper_alpha;
  std::optional<double> paper_beta;
  std::optional<double> paper_gamma;
  std::string paper_naming = "hyper";
  bool no_magic = false;
  bool magic_includes_prompt = false;
  bool token_pair_magic = false;
  std::optional<std::string> keyword_embed_template;
  std::optional<std::string> keyword_header;
  std::optional<std::string> base_prompt;
  std::optional<std::size_t> l;
};

struct BackendFlags {
  bool toy = false;
  std::uint64_t seed = 7;
  std::size_t dim = 128;
  std::vector<std::string> embeddings;
  std::string lm;
  std::string manifest;
  std::size_t jobs = 1;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string config_path;
};

void add_decode_flags(CLI::App* app, DecodeFlags& f) {
  app->add_option("--k", f.k, "Candidates per step (default 45; toy world 12)");
  app->add_option("--w-confidence", f.w_confidence, "Weight on LM confidence");
  app->add_option("--w-degeneration", f.w_degeneration, "Weight on the degeneration penalty");
  app->add_option("--w-magic", f.w_magic, "Weight on the audio-text magic score");
  app->add_option("--tau", f.tau, "Magic softmax temperature (default 10)");
  app->add_option("--w-end", f.w_end, "Strength of the early-end penalty");
  app->add_option("--max-tokens", f.max_tokens, "Generation budget");
  app->add_option("--end-tokens", f.end_tokens, "Sentence-ending surfaces")->delimiter(',');
  app->add_option("--paper-alpha", f.paper_alpha, "Alias weight; see --paper-naming");
  app->add_option("--paper-beta", f.paper_beta, "Alias weight; see --paper-naming");
  app->add_option("--paper-gamma", f.paper_gamma, "Alias weight; see --paper-naming");
  app->add_option("--paper-naming", f.paper_naming,
                  "hyper: alpha=degeneration, beta=confidence, gamma=magic; "
                  "equation: alpha=confidence, beta=degeneration, gamma=magic")
      ->check(CLI::IsMember({"hyper", "equation"}))
      ->capture_default_str();
  app->add_flag("--no-magic", f.no_magic, "Set w_magic to 0 (with -l 0: plain greedy decoding)");
  app->add_flag("--magic-includes-prompt", f.magic_includes_prompt, "Score prompt + generated text");
  app->add_flag("--token-pair-magic", f.token_pair_magic, "Score candidate against the previous token");
  app->add_option("--keyword-embed-template", f.keyword_embed_template, "Template with {} for keyword embedding");
  app->add_option("--keyword-header", f.keyword_header, "Keyword slot header (default Objects)");
  app->add_option("--base-prompt", f.base_prompt, "Base prompt (default \"This is a sound of\")");
  app->add_option("-l,--l", f.l, "Number of keywords in the prompt");
}

void add_backend_flags(CLI::App* app, BackendFlags& f) {
  app->add_flag("--toy", f.toy, "Use the built-in toy world");
  app->add_option("--seed", f.seed, "Toy world seed")->capture_default_str();
  app->add_option("--dim", f.dim, "Toy embedding dimension")->capture_default_str();
  app->add_option("--embeddings", f.embeddings, "emb/1 fixture file(s)");
  app->add_option("--lm", f.lm, "lm/1 fixture file");
  app->add_option("--manifest", f.manifest, "Manifest (JSON lines)");
  app->add_option("--jobs", f.jobs, "Clip-level parallelism")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_config_flag(CLI::App* app, Context& ctx) {
  app->add_option("--config", ctx.config_path, "key = value file; command-line flags win");
}

// Fills options left unset on the command line from the config file.
void apply_config_file(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';' || s[0] == '[') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key = value", line_no);
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw UsageError("config: nested config files are not supported");
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError("config: unknown key \"" + key + "\" (line " + std::to_string(line_no) + ")");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

struct Setup {
  Backends backends;
  std::optional<ToyWorld> world;
  std::optional<Manifest> manifest;
  DecodeConfig cfg;
  PromptTemplate tmpl;
};

Setup resolve(const BackendFlags& b, const DecodeFlags& d, bool need_manifest) {
  Setup s;
  if (b.toy) {
    if (!b.embeddings.empty() || !b.lm.empty()) throw UsageError("--toy cannot be combined with --embeddings/--lm");
    s.world = make_toy_world(b.seed, 20, b.dim);
    s.backends = s.world->backends();
    s.cfg = s.world->config;
    s.tmpl = s.world->tmpl;
    s.manifest = s.world->manifest;
  } else {
    if (b.embeddings.empty() || b.lm.empty()) throw UsageError("need --embeddings and --lm, or --toy");
    auto matcher = std::make_shared<FixtureMatcher>(load_embedding_fixtures(b.embeddings));
    auto lm = std::make_shared<TableLanguageModel>(load_lm_table(b.lm));
    s.backends = Backends{matcher, lm, std::filesystem::path(b.lm).stem().string()};
  }
  if (!b.manifest.empty()) s.manifest = load_manifest(b.manifest);
  if (need_manifest && !s.manifest) throw UsageError("need --manifest (or --toy)");

  DecodeConfig& c = s.cfg;
  if (d.k) c.k = *d.k;
  if (d.w_confidence) c.w_confidence = *d.w_confidence;
  if (d.w_degeneration) c.w_degeneration = *d.w_degeneration;
  if (d.w_magic) c.w_magic = *d.w_magic;
  if (d.tau) c.tau = *d.tau;
  if (d.w_end) c.w_end = *d.w_end;
  if (d.max_tokens) c.max_tokens = *d.max_tokens;
  if (!d.end_tokens.empty()) c.end_tokens = std::set<std::string>(d.end_tokens.begin(), d.end_tokens.end());

  const bool hyper = d.paper_naming == "hyper";
  auto alias = [](const std::optional<double>& a, const std::optional<double>& direct, double& target,
                  const char* alias_name, const char* direct_name) {
    if (!a) return;
    if (direct) {
      throw UsageError(std::string("--") + alias_name + " and --" + direct_name + " set the same weight");
    }
    target = *a;
  };
  alias(d.paper_alpha, hyper ? d.w_degeneration : d.w_confidence, hyper ? c.w_degeneration : c.w_confidence,
        "paper-alpha", hyper ? "w-degeneration" : "w-confidence");
  alias(d.paper_beta, hyper ? d.w_confidence : d.w_degeneration, hyper ? c.w_confidence : c.w_degeneration,
        "paper-beta", hyper ? "w-confidence" : "w-degeneration");
  alias(d.paper_gamma, d.w_magic, c.w_magic, "paper-gamma", "w-magic");
  if (d.no_magic) c.w_magic = 0.0;
  c.magic_includes_prompt = c.magic_includes_prompt || d.magic_includes_prompt;
  c.token_pair_magic = c.token_pair_magic || d.token_pair_magic;
  if (d.keyword_embed_template) c.keyword_embed_template = *d.keyword_embed_template;
  if (d.keyword_header) s.tmpl.keyword_header = *d.keyword_header;
  if (d.base_prompt) s.tmpl.base_prompt = *d.base_prompt;
  try {
    c.validate();
    s.tmpl.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return s;
}

// "name=path" or a bare path named after its stem.
std::pair<std::string, std::string> split_variant(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {std::filesystem::path(spec).stem().string(), spec};
  if (eq == 0 || eq + 1 == spec.size()) throw UsageError("bad --variant \"" + spec + "\"; expected NAME=PATH");
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

std::vector<KeywordVariant> resolve_variants(const Setup& s, const std::vector<std::string>& specs, bool none) {
  std::vector<KeywordVariant> out;
  if (none) out.push_back(KeywordVariant{"None", std::nullopt});
  if (specs.empty() && s.world) {
    out.push_back(KeywordVariant{"tags", s.world->tags});
    out.push_back(KeywordVariant{"tags+phrases", s.world->expanded});
  }
  for (const auto& spec : specs) {
    auto [name, path] = split_variant(spec);
    for (const auto& v : out) {
      if (v.name == name) throw UsageError("duplicate keyword variant \"" + name + "\"");
    }
    out.push_back(KeywordVariant{name, load_keywords(path, name)});
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

json sidecar(const std::string& command, const Setup& s, const BackendFlags& b, json extra) {
  json j = {{"command", command},
            {"config", json::parse(config_to_json(s.cfg, s.tmpl))},
            {"backends",
             {{"name", s.backends.name},
              {"matcher", s.backends.matcher ? s.backends.matcher->name() : ""},
              {"lm", s.backends.lm->name()},
              {"toy", b.toy},
              {"seed", b.seed},
              {"embeddings", b.embeddings},
              {"lm_path", b.lm},
              {"manifest", b.manifest}}},
            {"jobs", b.jobs}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

void echo_config(Context& ctx, const Setup& s, std::size_t l) {
  json j = json::parse(config_to_json(s.cfg, s.tmpl));
  j["l"] = l;
  ctx.err << "config: " << j.dump() << "\n";
}

int cmd_caption(Context& ctx, CLI::App* app, const BackendFlags& b, const DecodeFlags& d,
                const std::vector<std::string>& clip_args, const std::string& keywords_path, bool trace,
                bool greedy, bool evaluate_flag, const std::string& out_dir) {
  apply_config_file(app, ctx.config_path);
  Setup s = resolve(b, d, clip_args.empty());

  KeywordList keywords;
  if (!keywords_path.empty()) {
    keywords = load_keywords(keywords_path);
  } else if (s.world) {
    keywords = s.world->tags;
  }
  const std::size_t l = d.l.value_or(keywords.empty() ? 0 : 1);
  if (l > keywords.size()) {
    throw UsageError("-l " + std::to_string(l) + " exceeds keyword list size " + std::to_string(keywords.size()));
  }
  const bool use_greedy = greedy || (l == 0 && d.no_magic);
  echo_config(ctx, s, l);

  // Clip references: manifest ids resolve to their audio reference; other
  // strings are passed to the matcher as-is.
  Manifest targets;
  if (clip_args.empty()) {
    targets = *s.manifest;
  } else {
    for (const auto& c : clip_args) {
      ClipEntry e{c, c, {}};
      if (s.manifest) {
        for (const auto& m : s.manifest->clips) {
          if (m.clip_id == c) e = m;
        }
      }
      targets.clips.push_back(std::move(e));
    }
  }

  CandidateMap captions;
  std::map<std::string, std::string> failures;
  std::vector<std::string> trace_lines;
  std::optional<MetricReport> report;
  if (evaluate_flag) {
    BatchOptions opts;
    opts.jobs = b.jobs;
    opts.mode = use_greedy ? DecodeMode::kGreedy : DecodeMode::kGuided;
    BatchResult r = run_batch(targets, s.backends, keywords, s.tmpl, s.cfg, l, opts);
    captions = r.captions;
    failures = r.failures;
    report = r.report;
    for (const auto& [id, res] : r.results) {
      json j = json::parse(caption_to_json(res));
      j["clip_id"] = id;
      trace_lines.push_back(j.dump());
    }
  } else {
    for (const auto& clip : targets.clips) {
      try {
        CaptionResult res = use_greedy ? decode_greedy(*s.backends.lm, s.tmpl, s.cfg)
                                       : decode(clip.audio, *s.backends.matcher, *s.backends.lm, keywords,
                                                s.tmpl, s.cfg, l);
        captions[clip.clip_id] = res.text;
        json j = json::parse(caption_to_json(res));
        j["clip_id"] = clip.clip_id;
        trace_lines.push_back(j.dump());
      } catch (const Error& e) {
        if (targets.clips.size() == 1) throw;
        failures[clip.clip_id] = e.what();
        ctx.err << "error: clip " << clip.clip_id << ": " << e.what() << "\n";
      }
    }
  }

  if (trace) {
    for (const auto& line : trace_lines) ctx.out << line << "\n";
  } else if (targets.clips.size() == 1 && failures.empty()) {
    ctx.out << captions.begin()->second << "\n";
  } else {
    for (const auto& clip : targets.clips) {
      if (!failures.contains(clip.clip_id)) ctx.out << clip.clip_id << "\t" << captions[clip.clip_id] << "\n";
    }
  }
  if (report) ctx.out << report_to_table(*report);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path root(out_dir);
    write_candidates((root / "captions.json").string(), captions);
    json extra = {{"l", l}, {"greedy", use_greedy}, {"keywords", keywords.source_tag()}};
    if (report) extra["metrics"] = json::parse(report_to_json(*report));
    write_text((root / "captions.meta.json").string(), sidecar("caption", s, b, extra).dump(2) + "\n");
  }

  if (!failures.empty()) {
    ctx.err << failures.size() << " of " << targets.clips.size() << " clips failed\n";
    return 1;
  }
  return 0;
}

int cmd_evaluate(Context& ctx, CLI::App* app, const std::string& cands, const std::string& refs, bool as_json) {
  apply_config_file(app, ctx.config_path);
  MetricReport r = evaluate(load_candidates(cands), index_references(load_references(refs)));
  ctx.out << (as_json ? report_to_json(r, 2) + "\n" : report_to_table(r));
  return 0;
}

int cmd_ablate(Context& ctx, CLI::App* app, const BackendFlags& b, const DecodeFlags& d,
               const std::vector<std::string>& variant_specs, bool no_none, bool greedy_baseline,
               const std::string& out_path) {
  apply_config_file(app, ctx.config_path);
  Setup s = resolve(b, d, true);
  std::vector<KeywordVariant> variants = resolve_variants(s, variant_specs, !no_none);
  if (variants.empty()) throw UsageError("no keyword variants");
  const std::size_t l = d.l.value_or(1);
  echo_config(ctx, s, l);
  AblationOptions opts;
  opts.jobs = b.jobs;
  opts.include_greedy_baseline = greedy_baseline;
  std::vector<AblationRow> rows = run_ablation(*s.manifest, s.backends, variants, s.tmpl, s.cfg, l, opts);
  const std::string csv = ablation_to_csv(rows);
  ctx.out << csv;
  if (!out_path.empty()) {
    write_text(out_path, csv);
    json names = json::array();
    for (const auto& v : variants) names.push_back(v.name);
    json basket = rows.empty() ? json::array() : json(rows.front().report.included);
    write_text(out_path + ".json",
               sidecar("ablate", s, b, {{"l", l}, {"variants", names}, {"metric_basket", basket}}).dump(2) + "\n");
  }
  return 0;
}

int cmd_sweep(Context& ctx, CLI::App* app, const BackendFlags& b, const DecodeFlags& d, const std::string& axis,
              const std::vector<std::string>& values, const std::vector<std::string>& variant_specs,
              std::string keyword_list, const std::string& out_path) {
  apply_config_file(app, ctx.config_path);
  if (values.empty()) throw UsageError("--values is required");
  Setup s = resolve(b, d, true);
  KeywordCatalog catalog;
  for (auto& v : resolve_variants(s, variant_specs, true)) catalog[v.name] = v.list;
  SweepSpec spec;
  try {
    spec.axis = parse_axis(axis);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  spec.values = values;
  spec.fixed = s.cfg;
  if (keyword_list.empty()) keyword_list = s.world ? "tags" : (variant_specs.empty() ? "None" : split_variant(variant_specs.front()).first);
  spec.keyword_list = keyword_list;
  spec.l = d.l.value_or(keyword_list == "None" ? 0 : 1);
  echo_config(ctx, s, spec.l);
  std::vector<SweepRow> rows;
  try {
    rows = run_sweep(*s.manifest, s.backends, catalog, s.tmpl, spec, b.jobs);
  } catch (const InvalidArgumentError& e) {
    throw UsageError(e.what());
  }
  const std::string csv = sweep_to_csv(rows);
  ctx.out << csv;
  if (!out_path.empty()) {
    write_text(out_path, csv);
    json basket = json(rows.front().report.included);
    write_text(out_path + ".json", sidecar("sweep", s, b,
                                           {{"axis", axis},
                                            {"values", values},
                                            {"l", spec.l},
                                            {"keyword_list", keyword_list},
                                            {"metric_basket", basket}})
                                           .dump(2) +
                                       "\n");
  }
  return 0;
}

int run_app(int argc, char** argv, Context& ctx) {
  CLI::App app{"Zero-shot audio captioning with keyword prompts and audio-guided search", "zsac"};
  app.require_subcommand(1);

  BackendFlags backend;
  DecodeFlags decode_flags;
  std::function<int()> action;

  // caption
  std::vector<std::string> clips;
  std::string keywords_path;
  bool trace = false;
  bool greedy = false;
  bool evaluate_flag = false;
  std::string out_dir;
  CLI::App* caption = app.add_subcommand("caption", "Caption clips");
  add_backend_flags(caption, backend);
  add_decode_flags(caption, decode_flags);
  add_config_flag(caption, ctx);
  caption->add_option("--clip", clips, "Clip id from the manifest, or (toy) a raw description");
  caption->add_option("--keywords", keywords_path, "Keyword list file");
  caption->add_flag("--trace", trace, "Print full step traces as JSON lines");
  caption->add_flag("--greedy", greedy, "Audio-agnostic greedy decoding");
  caption->add_flag("--evaluate", evaluate_flag, "Score captions against manifest references");
  caption->add_option("--out-dir", out_dir, "Write captions.json and a config sidecar here");
  caption->callback([&] {
    action = [&] {
      return cmd_caption(ctx, caption, backend, decode_flags, clips, keywords_path, trace, greedy, evaluate_flag,
                         out_dir);
    };
  });

  // evaluate
  std::string cands_path;
  std::string refs_path;
  bool as_json = false;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score candidate captions");
  add_config_flag(evaluate_cmd, ctx);
  evaluate_cmd->add_option("--candidates", cands_path, "Candidates JSON")->required();
  evaluate_cmd->add_option("--refs", refs_path, "References JSON")->required();
  evaluate_cmd->add_flag("--json", as_json, "Print JSON instead of a table");
  evaluate_cmd->callback([&] { action = [&] { return cmd_evaluate(ctx, evaluate_cmd, cands_path, refs_path, as_json); }; });

  // ablate
  std::vector<std::string> variants;
  bool no_none = false;
  bool greedy_baseline = false;
  std::string out_path;
  CLI::App* ablate = app.add_subcommand("ablate", "Keyword list x MAGIC on/off grid");
  add_backend_flags(ablate, backend);
  add_decode_flags(ablate, decode_flags);
  add_config_flag(ablate, ctx);
  ablate->add_option("--variant", variants, "Keyword list as NAME=PATH (repeatable)");
  ablate->add_flag("--no-none", no_none, "Skip the keyword-free variant");
  ablate->add_flag("--greedy-baseline", greedy_baseline, "Append a greedy decoding row");
  ablate->add_option("-o,--out", out_path, "CSV output path (sidecar at PATH.json)");
  ablate->callback([&] {
    action = [&] { return cmd_ablate(ctx, ablate, backend, decode_flags, variants, no_none, greedy_baseline, out_path); };
  });

  // sweep
  std::string axis;
  std::vector<std::string> values;
  std::string keyword_list;
  CLI::App* sweep = app.add_subcommand("sweep", "One-axis hyperparameter sweep");
  add_backend_flags(sweep, backend);
  add_decode_flags(sweep, decode_flags);
  add_config_flag(sweep, ctx);
  sweep->add_option("--axis", axis, "w_confidence, w_degeneration, w_magic, tau, l, k or keyword_list")->required();
  sweep->add_option("--values", values, "Comma-separated values")->delimiter(',');
  sweep->add_option("--variant", variants, "Keyword list as NAME=PATH (repeatable)");
  sweep->add_option("--keyword-list", keyword_list, "Variant used by non keyword_list axes");
  sweep->add_option("-o,--out", out_path, "CSV output path (sidecar at PATH.json)");
  sweep->callback([&] {
    action = [&] {
      return cmd_sweep(ctx, sweep, backend, decode_flags, axis, values, variants, keyword_list, out_path);
    };
  });

  // keywords
  CLI::App* keywords = app.add_subcommand("keywords", "Keyword list utilities");
  keywords->require_subcommand(1);
  std::vector<std::string> merge_inputs;
  std::string merge_out;
  CLI::App* merge = keywords->add_subcommand("merge", "Merge keyword lists (first list's order first)");
  merge->add_option("lists", merge_inputs, "Keyword list files")->required()->expected(2, -1);
  merge->add_option("-o,--out", merge_out, "Output path")->required();
  merge->callback([&] {
    action = [&] {
      KeywordList merged = load_keywords(merge_inputs.front());
      ctx.out << merge_inputs.front() << ": " << merged.size() << "\n";
      for (std::size_t i = 1; i < merge_inputs.size(); ++i) {
        KeywordList extra = load_keywords(merge_inputs[i]);
        const std::size_t before = merged.size();
        merged = merge_keyword_lists(merged, extra);
        ctx.out << merge_inputs[i] << ": " << extra.size() << " (" << merged.size() - before << " new)\n";
      }
      write_keywords(merge_out, merged);
      ctx.out << "merged: " << merged.size() << "\n";
      return 0;
    };
  });

  std::string select_clip;
  std::string select_list;
  std::size_t select_l = 5;
  CLI::App* select = keywords->add_subcommand("select", "Rank keywords for a clip");
  add_backend_flags(select, backend);
  select->add_option("--clip", select_clip, "Clip id or (toy) raw description")->required();
  select->add_option("--keywords", select_list, "Keyword list file (toy default: built-in tags)");
  select->add_option("-l,--l", select_l, "How many to keep")->capture_default_str();
  select->callback([&] {
    action = [&] {
      Setup s = resolve(backend, DecodeFlags{}, false);
      KeywordList list = !select_list.empty() ? load_keywords(select_list)
                                              : (s.world ? s.world->tags : throw UsageError("need --keywords"));
      std::string ref = select_clip;
      if (s.manifest) {
        for (const auto& c : s.manifest->clips) {
          if (c.clip_id == select_clip) ref = c.audio;
        }
      }
      if (select_l > list.size()) throw UsageError("-l exceeds keyword list size");
      for (const auto& m : select_keywords(*s.backends.matcher, ref, list, select_l)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", m.similarity);
        ctx.out << m.rank << "\t" << buf << "\t" << m.keyword << "\n";
      }
      return 0;
    };
  });

  // fixtures
  CLI::App* fixtures = app.add_subcommand("fixtures", "Fixture file utilities");
  fixtures->require_subcommand(1);
  std::string gen_out;
  std::uint64_t gen_seed = 7;
  std::size_t gen_clips = 20;
  std::size_t gen_dim = 128;
  CLI::App* gen = fixtures->add_subcommand("gen-toy", "Write the toy world as fixture files");
  gen->add_option("-o,--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("--clips", gen_clips, "Clip count (1-20)")->capture_default_str();
  gen->add_option("--dim", gen_dim, "Embedding dimension")->capture_default_str();
  gen->callback([&] {
    action = [&] {
      ToyWorld w = make_toy_world(gen_seed, gen_clips, gen_dim);
      write_toy_world(w, gen_out);
      DecodeConfig cfg = w.config;
      write_text((std::filesystem::path(gen_out) / "config.json").string(), config_to_json(cfg, w.tmpl, 2) + "\n");
      ctx.out << "wrote toy fixtures (" << w.manifest.clips.size() << " clips, dim " << w.dim << ") to " << gen_out
              << "\n";
      return 0;
    };
  });
  std::vector<std::string> validate_paths;
  CLI::App* validate = fixtures->add_subcommand("validate", "Check fixture files");
  validate->add_option("files", validate_paths, "emb/1 or lm/1 files")->required();
  validate->callback([&] {
    action = [&] {
      int status = 0;
      for (const auto& p : validate_paths) {
        try {
          ctx.out << p << ": " << validate_fixture_file(p) << "\n";
        } catch (const Error& e) {
          ctx.err << p << ": " << e.what() << "\n";
          status = 1;
        }
      }
      return status;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    ctx.out << app.help("", CLI::AppFormatMode::Normal);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    ctx.out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    ctx.err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }
  return action ? action() : 2;
}

}  // namespace

int Run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, ""};
  set_warning_sink([&err](const std::string& msg) { err << "warning: " << msg << "\n"; });
  int code = 1;
  try {
    code = run_app(argc, argv, ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    code = 2;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  }
  set_warning_sink(nullptr);
  return code;
}

}  // namespace zsac::cli
