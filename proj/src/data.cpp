// Copyright 2026 The pmemn2n Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmemn2n/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pmemn2n/errors.hpp"

namespace pmemn2n {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t instance_seed(std::uint64_t seed, Split split, std::size_t dialog,
                            std::size_t turn) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(split));
  h = splitmix64(h ^ dialog);
  return splitmix64(h ^ turn);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c));
  });
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool include_in_pool(Speaker speaker, GlobalContent content) {
  switch (content) {
    case GlobalContent::kBoth: return true;
    case GlobalContent::kUserOnly: return speaker == Speaker::kUser;
    case GlobalContent::kBotOnly: return speaker == Speaker::kBot;
  }
  return true;
}

// Sample up to `cap` entries of `pool` without replacement; result sorted.
std::vector<std::uint32_t> sample_capped(std::vector<std::uint32_t> pool, std::size_t cap,
                                         Rng& rng) {
  if (pool.size() > cap) {
    // Partial Fisher-Yates over the first `cap` positions.
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(cap);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

std::size_t Dialog::turn_count() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto& e) {
    return std::holds_alternative<Exchange>(e);
  }));
}

std::vector<Dialog> parse_dialogs(std::string_view text, const ProfileSchema& schema,
                                  int task_id) {
  std::vector<Dialog> dialogs;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool in_dialog = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool blank = std::all_of(line.begin(), line.end(),
                                   [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) {
      in_dialog = false;
      continue;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos || !is_number(std::string_view(line).substr(0, space))) {
      throw ParseError(line_no, "expected `<n> ...`");
    }
    const std::string body = line.substr(space + 1);

    if (!in_dialog) {
      Dialog d;
      d.task_id = task_id;
      d.dialog_id = dialogs.size();
      if (body.find('\t') != std::string::npos) {
        throw ParseError(line_no, "dialog must start with a profile line");
      }
      try {
        d.profile = schema.from_values(split_ws(body));
      } catch (const std::invalid_argument& e) {
        throw ParseError(line_no, std::string("bad profile: ") + e.what());
      }
      dialogs.push_back(std::move(d));
      in_dialog = true;
      continue;
    }

    Dialog& d = dialogs.back();
    const auto tab = body.find('\t');
    if (tab != std::string::npos) {
      Exchange ex{body.substr(0, tab), body.substr(tab + 1)};
      if (ex.bot.find('\t') != std::string::npos) {
        throw ParseError(line_no, "more than one tab in exchange line");
      }
      if (split_ws(ex.bot).empty()) throw ParseError(line_no, "empty bot response");
      d.events.emplace_back(std::move(ex));
    } else if (auto fact = parse_kb_fact_line(body)) {
      d.events.emplace_back(std::move(*fact));
    } else {
      throw ParseError(line_no, "expected `<user>\\t<bot>` or `<item> R_<col> <value>`");
    }
  }
  for (const Dialog& d : dialogs) {
    if (d.turn_count() == 0) {
      throw ParseError(line_no, "dialog " + std::to_string(d.dialog_id) + " has no exchanges");
    }
  }
  return dialogs;
}

std::string serialize_dialogs(const std::vector<Dialog>& dialogs, const ProfileSchema& schema) {
  std::string out;
  for (std::size_t i = 0; i < dialogs.size(); ++i) {
    if (i > 0) out += '\n';
    const Dialog& d = dialogs[i];
    out += "1 " + schema.label(d.profile) + "\n";
    std::size_t n = 2;
    for (const DialogEvent& e : d.events) {
      out += std::to_string(n++) + " ";
      if (const auto* ex = std::get_if<Exchange>(&e)) {
        out += ex->user + "\t" + ex->bot + "\n";
      } else {
        out += format_kb_fact(std::get<KbFact>(e)) + "\n";
      }
    }
  }
  return out;
}

std::vector<std::string> parse_candidates(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_ws(line).empty()) continue;
    out.push_back(line);
  }
  return out;
}

std::string serialize_candidates(const std::vector<std::string>& candidates) {
  std::string out;
  for (const std::string& c : candidates) out += c + "\n";
  return out;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

const std::vector<Dialog>& Corpus::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kDev: return dev;
    case Split::kTest: return test;
  }
  return train;
}

void Corpus::validate() const {
  std::set<std::string> known(candidates.begin(), candidates.end());
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    for (const Dialog& d : split(s)) {
      for (const DialogEvent& e : d.events) {
        const auto* ex = std::get_if<Exchange>(&e);
        if (ex && !known.count(ex->bot)) {
          throw DataError("gold response missing from candidates (" + std::string(to_string(s)) +
                          " dialog " + std::to_string(d.dialog_id) + "): `" + ex->bot + "`");
        }
      }
    }
  }
}

std::uint64_t Corpus::fingerprint() const {
  std::uint64_t h = fnv1a(schema.serialize());
  h = fnv1a(kb.serialize(), h);
  h = fnv1a(serialize_candidates(candidates), h);
  return h;
}

Corpus load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("corpus directory not found: " + dir.string());
  Corpus corpus;
  corpus.schema = ProfileSchema::deserialize(read_file(dir / "schema.txt"));
  corpus.candidates = parse_candidates(read_file(dir / "candidates.txt"));
  if (fs::exists(dir / "kb.txt")) {
    const auto facts = parse_kb_facts(read_file(dir / "kb.txt"));
    corpus.kb = load_kb(facts);
  }

  const std::regex pattern(R"(task(\d+)-(train|dev|test)\.txt)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& path : files) {
    std::smatch m;
    const std::string name = path.filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const int task = std::stoi(m[1].str());
    std::vector<Dialog> dialogs;
    try {
      dialogs = parse_dialogs(read_file(path), corpus.schema, task);
    } catch (const ParseError& e) {
      throw DataError(name + ": " + e.what());
    }
    auto& target = m[2] == "train" ? corpus.train : m[2] == "dev" ? corpus.dev : corpus.test;
    for (Dialog& d : dialogs) {
      d.dialog_id = target.size();
      target.push_back(std::move(d));
    }
  }
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "schema.txt", corpus.schema.serialize());
  write_file(dir / "candidates.txt", serialize_candidates(corpus.candidates));
  if (corpus.kb.item_count() > 0) write_file(dir / "kb.txt", corpus.kb.serialize());
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    std::map<int, std::vector<Dialog>> by_task;
    for (const Dialog& d : corpus.split(s)) by_task[d.task_id].push_back(d);
    for (const auto& [task, dialogs] : by_task) {
      const std::string name = "task" + std::to_string(task) + "-" + std::string(to_string(s)) +
                               ".txt";
      write_file(dir / name, serialize_dialogs(dialogs, corpus.schema));
    }
  }
}

std::string profile_utterance(const Profile& profile, const ProfileSchema& schema) {
  return schema.label(profile);
}

std::vector<std::string> vocabulary_texts(const Corpus& corpus, const DatasetOptions& options) {
  std::vector<std::string> texts = corpus.candidates;
  for (const KbFact& f : corpus.kb.facts()) texts.push_back(format_kb_fact(f));
  for (Split s : {Split::kTrain, Split::kDev}) {
    for (const Dialog& d : corpus.split(s)) {
      if (options.profile_as_utterance) texts.push_back(profile_utterance(d.profile, corpus.schema));
      for (const MemoryEntry& e : history_entries(d.events)) texts.push_back(e.text);
    }
  }
  return texts;
}

std::vector<MemoryEntry> history_entries(std::span<const DialogEvent> events) {
  std::vector<MemoryEntry> out;
  for (const DialogEvent& e : events) {
    if (const auto* ex = std::get_if<Exchange>(&e)) {
      out.push_back({ex->user, Speaker::kUser});
      out.push_back({ex->bot, Speaker::kBot});
    } else {
      out.push_back({format_kb_fact(std::get<KbFact>(e)), Speaker::kUser, true});
    }
  }
  return out;
}

DialogInstance encode_instance(std::span<const MemoryEntry> history, std::string_view query,
                               const Profile& profile, const ProfileSchema& schema,
                               const KnowledgeBase& kb, const Vocabulary& vocab,
                               const DatasetOptions& options) {
  std::vector<MemoryEntry> memory;
  if (options.profile_as_utterance) {
    memory.push_back({profile_utterance(profile, schema), Speaker::kUser});
  }
  memory.insert(memory.end(), history.begin(), history.end());
  const std::size_t start =
      memory.size() > options.context_cap ? memory.size() - options.context_cap : 0;

  DialogInstance inst;
  std::vector<std::string> window_texts;
  for (std::size_t i = start; i < memory.size(); ++i) {
    inst.context.push_back(encode_memory_utterance(memory[i].text, i - start, memory[i].speaker,
                                                   vocab));
    window_texts.push_back(memory[i].text);
  }
  inst.query = encode_candidate(query, vocab);
  window_texts.emplace_back(query);
  inst.profile = encode_profile(profile, schema);
  inst.profile_label = schema.label(profile);
  if (kb.item_count() > 0) inst.mentioned_items = mentioned_items(window_texts, kb, options.mention_rule);
  return inst;
}

std::vector<DialogInstance> expand_instances(const Dialog& dialog, std::size_t dialog_index,
                                             const Corpus& corpus, const Vocabulary& vocab,
                                             const CandidateSet& candidates,
                                             const DatasetOptions& options) {
  std::vector<DialogInstance> out;
  std::vector<MemoryEntry> history;
  std::size_t turn = 0;
  for (const DialogEvent& e : dialog.events) {
    if (const auto* fact = std::get_if<KbFact>(&e)) {
      history.push_back({format_kb_fact(*fact), Speaker::kUser, true});
      continue;
    }
    const Exchange& ex = std::get<Exchange>(e);
    DialogInstance inst = encode_instance(history, ex.user, dialog.profile, corpus.schema,
                                          corpus.kb, vocab, options);
    auto gold = candidates.find(ex.bot);
    if (!gold) {
      throw DataError("gold response missing from candidates: `" + ex.bot + "`");
    }
    inst.true_index = *gold;
    inst.task_id = dialog.task_id;
    inst.dialog_index = dialog_index;
    inst.turn = turn++;
    out.push_back(std::move(inst));
    history.push_back({ex.user, Speaker::kUser});
    history.push_back({ex.bot, Speaker::kBot});
  }
  return out;
}

GlobalMemoryIndex build_global_pool(const Corpus& corpus, const Vocabulary& vocab,
                                    const DatasetOptions& options, GlobalPool& pool) {
  GlobalMemoryIndex index;
  for (std::size_t di = 0; di < corpus.train.size(); ++di) {
    const Dialog& d = corpus.train[di];
    GlobalMemoryIndex::Source source;
    source.train_dialog = di;
    source.profile_label = corpus.schema.label(d.profile);
    const auto entries = history_entries(d.events);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      // KB fact lines are retrieval results, not utterances of the user.
      if (entries[i].kb_fact || !include_in_pool(entries[i].speaker, options.global_content)) continue;
      const std::size_t t = std::min(i, options.time_features - 1);
      source.slots.push_back(static_cast<std::uint32_t>(pool.slots.size()));
      pool.slots.push_back(encode_memory_utterance(entries[i].text, t, entries[i].speaker, vocab));
    }
    index.by_profile[source.profile_label].push_back(index.sources.size());
    index.sources.push_back(std::move(source));
  }
  return index;
}

std::vector<std::uint32_t> build_global_memory(const GlobalMemoryIndex& index,
                                               const std::string& profile_label,
                                               std::int64_t exclude_train_dialog,
                                               const DatasetOptions& options, Rng& rng) {
  auto similar_it = index.by_profile.find(profile_label);
  std::vector<std::size_t> similar;
  if (similar_it != index.by_profile.end()) {
    for (std::size_t s : similar_it->second) {
      if (static_cast<std::int64_t>(index.sources[s].train_dialog) != exclude_train_dialog) {
        similar.push_back(s);
      }
    }
  }

  std::vector<std::size_t> chosen;
  if (options.global_source == GlobalSource::kSimilarUsers) {
    chosen = std::move(similar);
  } else {
    // Control: as many users as the similar pool has, drawn uniformly from
    // every other training dialog regardless of profile.
    std::vector<std::size_t> others;
    for (std::size_t s = 0; s < index.sources.size(); ++s) {
      if (static_cast<std::int64_t>(index.sources[s].train_dialog) != exclude_train_dialog) {
        others.push_back(s);
      }
    }
    const std::size_t want = std::min(similar.size(), others.size());
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = i + rng.index(others.size() - i);
      std::swap(others[i], others[j]);
    }
    others.resize(want);
    std::sort(others.begin(), others.end());
    chosen = std::move(others);
  }

  std::vector<std::uint32_t> slots;
  for (std::size_t s : chosen) {
    const auto& src = index.sources[s].slots;
    slots.insert(slots.end(), src.begin(), src.end());
  }
  return sample_capped(std::move(slots), options.global_cap, rng);
}

namespace {

template <Split S>
void assign_global(SplitInstances<S>& split, const GlobalMemoryIndex& index,
                   const DatasetOptions& options, std::uint64_t seed) {
  for (DialogInstance& inst : split.items) {
    Rng rng(instance_seed(seed, S, inst.dialog_index, inst.turn));
    inst.global_memory =
        build_global_memory(index, inst.profile_label, inst.own_train_dialog, options, rng);
  }
}

template <Split S>
void expand_split(const Corpus& corpus, Dataset& ds, SplitInstances<S>& out) {
  const auto& dialogs = corpus.split(S);
  for (std::size_t di = 0; di < dialogs.size(); ++di) {
    auto items = expand_instances(dialogs[di], di, corpus, ds.vocab, ds.candidates, ds.options);
    for (DialogInstance& inst : items) {
      if constexpr (S == Split::kTrain) inst.own_train_dialog = static_cast<std::int64_t>(di);
      out.items.push_back(std::move(inst));
    }
  }
}

}  // namespace

Dataset build_dataset(const Corpus& corpus, const DatasetOptions& options) {
  if (options.context_cap == 0 || options.global_cap == 0 || options.time_features == 0) {
    throw std::invalid_argument("dataset options: caps and time features must be positive");
  }
  if (options.context_cap > options.time_features) {
    throw std::invalid_argument("dataset options: context_cap exceeds time feature count");
  }
  corpus.validate();
  Dataset ds;
  ds.options = options;
  const auto texts = vocabulary_texts(corpus, options);
  ds.vocab = build_vocabulary(texts, options.time_features);
  ds.candidates = build_candidate_set(corpus.candidates, ds.vocab,
                                      corpus.kb.item_count() > 0 ? &corpus.kb : nullptr);
  expand_split(corpus, ds, ds.train);
  expand_split(corpus, ds, ds.dev);
  expand_split(corpus, ds, ds.test);
  if (options.build_global_memory) {
    ds.global_index = build_global_pool(corpus, ds.vocab, options, ds.pool);
    resample_global_memory(ds, options.global_seed);
  }
  return ds;
}

void resample_global_memory(Dataset& dataset, std::uint64_t seed) {
  assign_global(dataset.train, dataset.global_index, dataset.options, seed);
  assign_global(dataset.dev, dataset.global_index, dataset.options, seed);
  assign_global(dataset.test, dataset.global_index, dataset.options, seed);
}

}  // namespace pmemn2n
