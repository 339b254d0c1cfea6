// SPDX-License-Identifier: Apache-2.0

#include "zsac/toy_world.h"

#include <array>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace zsac {

namespace {

struct Subject {
  const char* name;
  const char* verb_a;
  const char* verb_b;
};

constexpr std::array<Subject, 10> kSubjects = {{
    {"dog", "barking", "growling"},
    {"cat", "meowing", "purring"},
    {"bird", "chirping", "singing"},
    {"car", "honking", "accelerating"},
    {"rain", "pattering", "pouring"},
    {"baby", "crying", "laughing"},
    {"train", "rumbling", "whistling"},
    {"bell", "ringing", "chiming"},
    {"wind", "howling", "gusting"},
    {"crowd", "cheering", "applauding"},
}};

constexpr std::array<std::array<const char*, 2>, 5> kAdverbs = {{
    {"loudly", "softly"},
    {"nearby", "faraway"},
    {"repeatedly", "briefly"},
    {"outside", "indoors"},
    {"constantly", "suddenly"},
}};

constexpr std::array<const char*, 10> kFillers = {"something", "noise", "happening", "there", "it",
                                                   "audio", "recording", "clip", "background", "stuff"};

constexpr std::array<const char*, 10> kDistractors = {"music",  "speech", "siren", "thunder", "footsteps",
                                                      "typing", "engine", "water", "horn",    "clock"};

using Row = std::vector<std::pair<std::string, double>>;

// Spreads mass evenly over the fillers.
void add_fillers(Row& row, double mass) {
  for (const char* f : kFillers) row.emplace_back(f, mass / kFillers.size());
}

}  // namespace

Backends ToyWorld::backends() const { return Backends{matcher, lm, "toy"}; }

ToyWorld make_toy_world(std::uint64_t seed, std::size_t clips, std::size_t dim) {
  if (clips == 0 || clips > 2 * kSubjects.size()) {
    throw InvalidArgumentError("toy world supports 1 to 20 clips");
  }
  ToyWorld w;
  w.seed = seed;
  w.dim = dim;
  w.matcher = toy_matcher(seed, dim);

  std::vector<std::string> vocab = {"<bos>", "<eos>", "<unk>", "."};
  for (const char* f : kFillers) vocab.push_back(f);
  for (const auto& pair : kAdverbs) vocab.insert(vocab.end(), pair.begin(), pair.end());

  LmTable& t = w.table;
  t.granularity = Granularity::kWord;
  {
    Row fallback;
    add_fillers(fallback, 0.6);
    fallback.emplace_back(".", 0.3);
    t.ngrams[""] = fallback;
  }
  for (const auto& pair : kAdverbs) {
    for (const char* adv : pair) {
      Row row = {{".", 0.7}};
      add_fillers(row, 0.2);
      t.ngrams[adv] = row;
    }
  }

  std::vector<std::string> tags;
  std::vector<std::string> phrases;
  for (std::size_t s = 0; s < kSubjects.size(); ++s) {
    const Subject& sub = kSubjects[s];
    const auto& adv = kAdverbs[s % kAdverbs.size()];
    vocab.insert(vocab.end(), {sub.name, sub.verb_a, sub.verb_b});
    tags.push_back(sub.name);
    phrases.push_back(std::string(sub.name) + " " + sub.verb_a);

    Row named = {{sub.name, 0.6}};
    add_fillers(named, 0.3);
    t.ngrams[std::string(sub.name) + " . this is a sound of"] = named;

    Row subject = {{sub.verb_a, 0.45}, {sub.verb_b, 0.35}};
    add_fillers(subject, 0.15);
    t.ngrams[sub.name] = subject;

    Row after_a = {{adv[0], 0.45}, {adv[1], 0.35}};
    add_fillers(after_a, 0.15);
    t.ngrams[sub.verb_a] = after_a;

    Row after_b = {{adv[1], 0.45}, {adv[0], 0.35}};
    add_fillers(after_b, 0.15);
    t.ngrams[sub.verb_b] = after_b;
  }
  // Prompt words are encodable but never proposed by any row.
  for (const char* word : {"objects", ":", ",", "this", "is", "a", "sound", "of"}) vocab.push_back(word);
  for (const char* d : kDistractors) {
    tags.push_back(d);
    vocab.push_back(d);
  }
  t.vocab = vocab;
  w.lm = std::make_shared<TableLanguageModel>(t, "toy-table");

  w.tags = KeywordList::from_entries(tags, "toy-tags");
  std::vector<std::string> expanded = tags;
  expanded.insert(expanded.end(), phrases.begin(), phrases.end());
  w.expanded = KeywordList::from_entries(expanded, "toy-tags+phrases");

  for (std::size_t i = 0; i < clips; ++i) {
    const Subject& sub = kSubjects[i / 2];
    const auto& adv = kAdverbs[(i / 2) % kAdverbs.size()];
    const std::string s = sub.name;
    const std::string v = i % 2 == 0 ? sub.verb_a : sub.verb_b;
    const std::string a = i % 2 == 0 ? adv[0] : adv[1];
    ClipEntry e;
    e.clip_id = "c" + std::to_string(i + 1);
    e.audio = e.clip_id;
    e.refs = {s + " " + v + " " + a, "a " + s + " is " + v + " " + a, "the " + s + " is " + v + " " + a,
              "a " + s + " " + v, s + " " + v + " " + a + " for a while"};
    w.matcher->register_clip(e.clip_id, s + " " + v + " " + a);
    w.manifest.clips.push_back(std::move(e));
  }

  w.config.k = 12;
  w.config.w_confidence = 0.5;
  w.config.w_degeneration = 0.0;
  w.config.w_magic = 1.0;
  w.config.tau = 10.0;
  w.config.w_end = 1.0;
  w.config.max_tokens = 12;
  return w;
}

void write_toy_world(const ToyWorld& world, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);

  write_manifest((root / "manifest.jsonl").string(), world.manifest);

  FixtureStore store;
  store.fallback_seed = world.seed;
  store.dim = world.dim;
  for (const auto& c : world.manifest.clips) store.audio.emplace(c.clip_id, world.matcher->embed_audio(c.audio));
  for (const auto& k : world.expanded.entries()) store.text.emplace(k, world.matcher->embed_text(k));
  write_embedding_fixtures((root / "embeddings.jsonl").string(), store);

  write_lm_table((root / "lm.json").string(), world.table);
  write_keywords((root / "keywords.txt").string(), world.tags);
  write_keywords((root / "keywords_expanded.txt").string(), world.expanded);

  nlohmann::json refs = nlohmann::json::object();
  for (const auto& c : world.manifest.clips) refs[c.clip_id] = c.refs;
  std::ofstream out(root / "references.json", std::ios::trunc);
  if (!out) throw IoError("cannot write references.json in " + dir);
  out << refs.dump(1) << "\n";
}

}  // namespace zsac
