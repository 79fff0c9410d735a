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

#ifndef PMEMN2N_DATA_HPP_
#define PMEMN2N_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pmemn2n/encoding.hpp"
#include "pmemn2n/kb.hpp"
#include "pmemn2n/model.hpp"

namespace pmemn2n {

struct Exchange {
  std::string user;
  std::string bot;
  friend bool operator==(const Exchange&, const Exchange&) = default;
};

// Either a (user, bot) exchange or a KB fact line appended to the history.
using DialogEvent = std::variant<Exchange, KbFact>;

struct Dialog {
  Profile profile;
  std::vector<DialogEvent> events;
  int task_id = 0;
  std::size_t dialog_id = 0;

  std::size_t turn_count() const;
  friend bool operator==(const Dialog&, const Dialog&) = default;
};

// Dialog file grammar: dialogs separated by blank lines; the first line is
// `1 <attr_1> ... <attr_n>`; then `<n> <user>\t<bot>` exchanges or
// `<n> <item> R_<col> <value>` fact lines. Throws ParseError with the line
// number on malformed input.
std::vector<Dialog> parse_dialogs(std::string_view text, const ProfileSchema& schema,
                                  int task_id = 0);
std::string serialize_dialogs(const std::vector<Dialog>& dialogs, const ProfileSchema& schema);

std::vector<std::string> parse_candidates(std::string_view text);
std::string serialize_candidates(const std::vector<std::string>& candidates);

enum class Split { kTrain, kDev, kTest };
std::string_view to_string(Split split);

// Instances tagged with their split at the type level, so a training loop
// cannot be handed test data by accident.
template <Split S>
struct SplitInstances {
  static constexpr Split kSplit = S;
  std::vector<DialogInstance> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

// Raw corpus: dialogs per split plus the shared candidate list, KB and schema.
struct Corpus {
  ProfileSchema schema;
  KnowledgeBase kb;
  std::vector<std::string> candidates;
  std::vector<Dialog> train;
  std::vector<Dialog> dev;
  std::vector<Dialog> test;

  const std::vector<Dialog>& split(Split s) const;
  // Checks that every gold response is a candidate (DataError otherwise).
  void validate() const;
  std::uint64_t fingerprint() const;
};

// Corpus directory layout:
//   schema.txt, candidates.txt, kb.txt (optional),
//   task<k>-{train,dev,test}.txt for every task present.
Corpus load_corpus(const std::filesystem::path& dir);
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

enum class GlobalSource { kSimilarUsers, kRandomUsers };
enum class GlobalContent { kBoth, kUserOnly, kBotOnly };

struct DatasetOptions {
  std::size_t time_features = kDefaultTimeFeatures;
  std::size_t context_cap = 250;
  std::size_t global_cap = 1000;
  bool build_global_memory = true;
  GlobalSource global_source = GlobalSource::kSimilarUsers;
  GlobalContent global_content = GlobalContent::kBoth;
  std::uint64_t global_seed = 17;
  // Baseline input: the profile is prepended as a user utterance.
  bool profile_as_utterance = false;
  MentionRule mention_rule = MentionRule::kItemName;
};

// Pool slots of training dialogs, grouped so per-instance sampling is cheap.
struct GlobalMemoryIndex {
  struct Source {
    std::size_t train_dialog = 0;
    std::string profile_label;
    std::vector<std::uint32_t> slots;
  };
  std::vector<Source> sources;  // one per training dialog
  std::map<std::string, std::vector<std::size_t>> by_profile;
};

// Encoded corpus ready for training and evaluation.
struct Dataset {
  Vocabulary vocab;
  CandidateSet candidates;
  GlobalPool pool;
  GlobalMemoryIndex global_index;
  DatasetOptions options;
  SplitInstances<Split::kTrain> train;
  SplitInstances<Split::kDev> dev;
  SplitInstances<Split::kTest> test;

  SharedInputs shared() const { return {&candidates, &pool}; }
};

// Every text the vocabulary is built from: train/dev utterances,
// candidates and KB facts.
std::vector<std::string> vocabulary_texts(const Corpus& corpus, const DatasetOptions& options);

struct MemoryEntry {
  std::string text;
  Speaker speaker = Speaker::kUser;
  bool kb_fact = false;
};

// Memory entries of a dialog history, in order: fact lines as user-side
// entries, each exchange as a user then a bot entry.
std::vector<MemoryEntry> history_entries(std::span<const DialogEvent> events);

// Encodes one prediction point from raw history. The newest `context_cap`
// entries are kept and time features count from the start of that window.
// `true_index`, metadata and global memory are left for the caller.
DialogInstance encode_instance(std::span<const MemoryEntry> history, std::string_view query,
                               const Profile& profile, const ProfileSchema& schema,
                               const KnowledgeBase& kb, const Vocabulary& vocab,
                               const DatasetOptions& options);

// One instance per exchange: the memory holds every earlier utterance and
// fact line (last `context_cap` kept, time features relative to the kept
// window); the query is the current user utterance. Throws DataError when a
// gold response is not a candidate.
std::vector<DialogInstance> expand_instances(const Dialog& dialog, std::size_t dialog_index,
                                             const Corpus& corpus, const Vocabulary& vocab,
                                             const CandidateSet& candidates,
                                             const DatasetOptions& options);

// Encodes the utterances of every training dialog into `pool` and indexes them.
GlobalMemoryIndex build_global_pool(const Corpus& corpus, const Vocabulary& vocab,
                                    const DatasetOptions& options, GlobalPool& pool);

// Global memory of one instance: utterances of other training dialogs with
// an identical profile (or, for the random-user control, of as many randomly
// chosen other dialogs), capped by sampling without replacement. The
// instance's own dialog is never included. `exclude_train_dialog` is the
// instance's own training-dialog index, or -1.
std::vector<std::uint32_t> build_global_memory(const GlobalMemoryIndex& index,
                                               const std::string& profile_label,
                                               std::int64_t exclude_train_dialog,
                                               const DatasetOptions& options, Rng& rng);

Dataset build_dataset(const Corpus& corpus, const DatasetOptions& options = {});

// Re-samples every instance's global memory with a new seed.
void resample_global_memory(Dataset& dataset, std::uint64_t seed);

// Text of the profile-as-utterance memory entry used by the baseline.
std::string profile_utterance(const Profile& profile, const ProfileSchema& schema);

}  // namespace pmemn2n

#endif  // PMEMN2N_DATA_HPP_
