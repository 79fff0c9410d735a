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

#ifndef PMEMN2N_KB_HPP_
#define PMEMN2N_KB_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pmemn2n/numerics.hpp"

namespace pmemn2n {

// One `<item> R_<column> <value>` line.
struct KbFact {
  std::string item;
  std::string column;  // without the R_ prefix
  std::string value;
  friend bool operator==(const KbFact&, const KbFact&) = default;
};

// Row/column coordinates of an entity.
struct EntityRef {
  std::size_t item = 0;
  std::size_t column = 0;
  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

enum class MentionRule {
  kItemName,        // the item-name token occurs in the context
  kAnyEntityOfItem  // the item name or any of its entity values occurs
};

MentionRule parse_mention_rule(std::string_view name);
std::string_view to_string(MentionRule rule);

// Items x K property columns. Entity values are globally unique, so each
// resolves back to a single (item, column) cell. Lookups use the same
// token normalization as the vocabulary.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  std::size_t item_count() const { return item_names_.size(); }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::string>& item_names() const { return item_names_; }
  const std::string& entity(std::size_t item, std::size_t column) const {
    return cells_[item * columns_.size() + column];
  }
  std::size_t reverse_index_size() const { return by_entity_.size(); }

  std::optional<EntityRef> resolve(std::string_view entity) const;
  std::optional<std::size_t> find_item(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

  // Facts in item-major, column-minor order.
  std::vector<KbFact> facts() const;
  std::string serialize() const;
  std::uint64_t fingerprint() const;

  friend KnowledgeBase load_kb(std::span<const KbFact> facts,
                               std::span<const std::string> keep_columns);

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> item_names_;
  std::vector<std::string> cells_;  // row-major items x columns
  std::unordered_map<std::string, EntityRef> by_entity_;
  std::unordered_map<std::string, std::size_t> by_item_;
};

// Builds the KB from facts. Columns appear in first-seen order; when
// `keep_columns` is non-empty only those columns are kept, in that order.
// Throws DataError on a duplicate entity string, a repeated cell, or an item
// missing one of the columns.
KnowledgeBase load_kb(std::span<const KbFact> facts,
                      std::span<const std::string> keep_columns = {});

// Parses `[n] <item> R_<column> <value>` lines; blank lines are skipped.
std::vector<KbFact> parse_kb_facts(std::string_view text);
// Parses a single tabless dialog fact line body (no leading number).
std::optional<KbFact> parse_kb_fact_line(std::string_view body);
std::string format_kb_fact(const KbFact& fact);

// Entity mentioned by a candidate response, if any. Throws DataError when
// the candidate names more than one distinct entity.
std::optional<EntityRef> candidate_entity(std::string_view candidate_text,
                                          const KnowledgeBase& kb);

// Sorted, de-duplicated item ids mentioned anywhere in `utterances`.
std::vector<std::size_t> mentioned_items(std::span<const std::string> utterances,
                                         const KnowledgeBase& kb,
                                         MentionRule rule = MentionRule::kItemName);

// b_k = v_j when candidate k carries entity (i, j) and item i is mentioned,
// otherwise 0.
Vector bias_vector(std::span<const double> preference,
                   std::span<const std::optional<EntityRef>> candidate_entities,
                   std::span<const std::size_t> mentioned);
Vector bias_vector(std::span<const double> preference,
                   std::span<const std::string> candidates,
                   std::span<const std::string> context, const KnowledgeBase& kb,
                   MentionRule rule = MentionRule::kItemName);

}  // namespace pmemn2n

#endif  // PMEMN2N_KB_HPP_
