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

#ifndef PMEMN2N_EVAL_HPP_
#define PMEMN2N_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmemn2n/data.hpp"
#include "pmemn2n/model.hpp"
#include "pmemn2n/training.hpp"

namespace pmemn2n {

// Accuracy split by DialogInstance::task_id.
std::map<int, double> accuracy_by_task(const ModelParameters& params,
                                       std::span<const DialogInstance> instances,
                                       const ModelConfig& model, const SharedInputs& shared);

// True when the gold response names a KB entity (the turns where the
// preference bias can matter).
bool is_ambiguous_turn(const DialogInstance& instance, const CandidateSet& candidates);

// Accuracy restricted to ambiguous turns; 0 with a warning when there are none.
double ambiguous_accuracy(const ModelParameters& params, std::span<const DialogInstance> instances,
                          const ModelConfig& model, const SharedInputs& shared);

// The dialogs of a single task (candidates, KB and schema unchanged).
Corpus task_subset(const Corpus& corpus, int task_id);
// Sorted task ids present in any split.
std::vector<int> corpus_tasks(const Corpus& corpus);

// One model trained and scored end to end.
struct Experiment {
  Dataset dataset;
  TrainState state;
  TrainReport report;
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
};

Experiment run_experiment(const Corpus& corpus, const ModelConfig& model,
                          const DatasetOptions& options, const TrainConfig& train);

struct AblationVariant {
  std::string name;
  ModelConfig model;
  bool profile_as_utterance = false;
};

// The standard ablation rows: baseline (profile given as a user utterance), profile
// embedding only, global memory only, profile model (both), preference
// only, combined. Dimensions, hops and caps come from `base`.
std::vector<AblationVariant> standard_variants(const ModelConfig& base);

struct AblationCell {
  std::string variant;
  int task = 0;
  double test_accuracy = 0.0;
  double dev_accuracy = 0.0;
  std::size_t best_epoch = 0;
  double seconds = 0.0;
};

using AblationProgress = std::function<void(const AblationCell&)>;

// Trains every variant on every task separately, all from the same seed and
// data order. `tasks` empty means every task in the corpus.
std::vector<AblationCell> ablation_grid(const Corpus& corpus,
                                        const std::vector<AblationVariant>& variants,
                                        std::vector<int> tasks, const DatasetOptions& options,
                                        const TrainConfig& train,
                                        const AblationProgress& progress = {});

// `model,task1,...` with one row per variant, accuracies in percent (2 dp).
std::string ablation_csv(const std::vector<AblationCell>& cells);

struct TendencyMatrix {
  std::vector<std::string> profiles;  // row labels, also the column groups
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::size_t> group_sizes;
  double diagonal_mean = 0.0;
  double off_diagonal_mean = 0.0;

  std::string to_csv() const;
};

// Entry (g, h) = mean sigma(p_g . r_i) over candidates styled for profile h.
// `groups` maps candidate text to profile label; unlabelled candidates are
// ignored; an empty group leaves its column missing.
TendencyMatrix tendency_confusion(const ModelParameters& params, const ProfileSchema& schema,
                                  const CandidateSet& candidates,
                                  const std::map<std::string, std::string>& groups);

// Candidate groups for corpora without generator metadata: a candidate
// belongs to the profile that produced it as a gold response in at least
// `purity` of its (>= min_count) training occurrences.
std::map<std::string, std::string> infer_candidate_groups(const Corpus& corpus,
                                                          double purity = 0.9,
                                                          std::size_t min_count = 2);

struct PreferenceRow {
  std::string profile;
  std::vector<double> raw;     // v = ReLU(E a)
  std::vector<double> scores;  // v / |v|
  bool degenerate = false;     // v == 0; scores are all zero
};

std::vector<PreferenceRow> preference_scores(const ModelParameters& params,
                                             const ProfileSchema& schema);
std::string preference_csv(const std::vector<PreferenceRow>& rows,
                           const std::vector<std::string>& columns);

struct GlobalControlResult {
  double similar_accuracy = 0.0;
  double random_accuracy = 0.0;
  std::size_t similar_best_epoch = 0;
  std::size_t random_best_epoch = 0;
  bool single_profile = false;
};

// Trains the same global-memory model twice, once with similar-user pools
// and once with random-user pools, and reports both test accuracies.
GlobalControlResult global_memory_control(const Corpus& corpus, const ModelConfig& model,
                                          const DatasetOptions& options,
                                          const TrainConfig& train);

// Seeds, config hashes and corpus fingerprint of a run, as JSON.
std::string manifest_json(const std::string& command, const Corpus& corpus,
                          const ModelConfig& model, const DatasetOptions& options,
                          const TrainConfig& train);

}  // namespace pmemn2n

#endif  // PMEMN2N_EVAL_HPP_
