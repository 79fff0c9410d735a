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

#ifndef PMEMN2N_SYNTHETIC_HPP_
#define PMEMN2N_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pmemn2n/data.hpp"

namespace pmemn2n {

// Restaurant-booking corpus with planted personalization:
//   * bot utterances carry a profile-specific appellation (age x gender),
//   * young users want the `social` contact, everyone else the `phone`,
//   * option ordering follows R_popularity for young users and R_rating
//     for the others.
// Task 4 dialogs are emitted as matched pairs whose content is identical
// and whose profiles prefer different contact columns, and they use no
// styled phrases, so content alone cannot beat chance on the contact turn.
struct SyntheticConfig {
  std::uint64_t seed = 1;
  std::vector<int> tasks = {1};
  // Dialog counts per task and split.
  std::size_t train = 70;
  std::size_t dev = 15;
  std::size_t test = 15;
  std::size_t kb_items = 16;
  std::vector<std::string> kb_columns = {"phone", "social"};
  std::vector<ProfileSchema::Attribute> schema = {
      {"gender", {"male", "female"}}, {"age", {"young", "middle-aged", "elderly"}}};
  bool styled = true;

  void validate() const;
  // JSON form. `dialogs` may replace train/dev/test and is split 70/15/15.
  static SyntheticConfig from_json(std::string_view text);
  std::string to_json() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  // Candidate text -> label of the profile its style targets.
  std::map<std::string, std::string> candidate_groups;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// KB column a profile prefers under the planted rule.
std::string preferred_column(const Profile& profile);

// Writes the corpus files plus `candidate_groups.tsv` (label \t candidate)
// and `generator.json`.
void save_synthetic(const SyntheticCorpus& synthetic, const SyntheticConfig& config,
                    const std::filesystem::path& dir);
std::map<std::string, std::string> load_candidate_groups(const std::filesystem::path& dir);

}  // namespace pmemn2n

#endif  // PMEMN2N_SYNTHETIC_HPP_
