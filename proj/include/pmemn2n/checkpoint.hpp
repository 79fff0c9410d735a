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

#ifndef PMEMN2N_CHECKPOINT_HPP_
#define PMEMN2N_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pmemn2n/data.hpp"
#include "pmemn2n/training.hpp"

namespace pmemn2n {

// A self-contained model file: configs, parameters, velocities and the
// vocabulary, schema, candidates and KB the parameters were trained
// against, so `chat` needs nothing else. Stored as JSON; doubles are
// written with round-trip precision, so save/load is bit-exact.
struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  DatasetOptions data;
  TrainState state;
  Vocabulary vocab;
  ProfileSchema schema;
  std::vector<std::string> candidates;
  KnowledgeBase kb;
  std::uint64_t corpus_fingerprint = 0;

  // Bundles a finished run with the corpus/dataset it came from.
  static Checkpoint capture(const ModelConfig& model, const TrainConfig& train,
                            const Dataset& dataset, const Corpus& corpus, TrainState state);

  std::string to_json() const;
  // Throws DataError when the text is malformed, shapes disagree with the
  // embedded vocabulary/schema/KB, or a stored fingerprint does not match.
  static Checkpoint from_json(std::string_view text);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  // Throws DataError naming the first component whose fingerprint differs
  // from what `corpus`/`dataset` produce.
  void check_compatible(const Dataset& dataset, const Corpus& corpus) const;

  ModelShapes shapes() const;
};

std::string_view to_string(GlobalSource source);
std::string_view to_string(GlobalContent content);
GlobalSource parse_global_source(std::string_view name);
GlobalContent parse_global_content(std::string_view name);

// Compact JSON objects of the run configuration (checkpoint and manifest).
std::string to_json(const ModelConfig& model);
std::string to_json(const TrainConfig& train);
std::string to_json(const DatasetOptions& data);

}  // namespace pmemn2n

#endif  // PMEMN2N_CHECKPOINT_HPP_
