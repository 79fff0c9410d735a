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

#include "pmemn2n/kb.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pmemn2n/encoding.hpp"
#include "pmemn2n/errors.hpp"

namespace pmemn2n {

namespace {

constexpr std::string_view kColumnPrefix = "R_";

std::string normalize(std::string_view token) {
  auto tokens = tokenize(token);
  if (tokens.size() != 1) {
    throw DataError("knowledge base: `" + std::string(token) + "` is not a single token");
  }
  return tokens.front();
}

bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

MentionRule parse_mention_rule(std::string_view name) {
  if (name == "item_name") return MentionRule::kItemName;
  if (name == "any_entity_of_item") return MentionRule::kAnyEntityOfItem;
  throw std::invalid_argument("unknown mention rule `" + std::string(name) + "`");
}

std::string_view to_string(MentionRule rule) {
  return rule == MentionRule::kItemName ? "item_name" : "any_entity_of_item";
}

std::optional<EntityRef> KnowledgeBase::resolve(std::string_view entity) const {
  auto it = by_entity_.find(std::string(entity));
  if (it == by_entity_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> KnowledgeBase::find_item(std::string_view name) const {
  auto it = by_item_.find(std::string(name));
  if (it == by_item_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> KnowledgeBase::find_column(std::string_view name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<KbFact> KnowledgeBase::facts() const {
  std::vector<KbFact> out;
  out.reserve(cells_.size());
  for (std::size_t i = 0; i < item_names_.size(); ++i) {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      out.push_back({item_names_[i], columns_[j], entity(i, j)});
    }
  }
  return out;
}

std::string KnowledgeBase::serialize() const {
  std::string out;
  for (const KbFact& f : facts()) out += format_kb_fact(f) + "\n";
  return out;
}

std::uint64_t KnowledgeBase::fingerprint() const { return fnv1a(serialize()); }

KnowledgeBase load_kb(std::span<const KbFact> facts, std::span<const std::string> keep_columns) {
  KnowledgeBase kb;
  if (keep_columns.empty()) {
    for (const KbFact& f : facts) {
      if (std::find(kb.columns_.begin(), kb.columns_.end(), f.column) == kb.columns_.end()) {
        kb.columns_.push_back(f.column);
      }
    }
  } else {
    kb.columns_.assign(keep_columns.begin(), keep_columns.end());
  }
  const std::size_t k = kb.columns_.size();

  std::map<std::string, std::vector<std::optional<std::string>>> rows;
  for (const KbFact& f : facts) {
    auto col = kb.find_column(f.column);
    if (!col) continue;
    auto [it, inserted] = rows.try_emplace(f.item, k);
    if (inserted) kb.item_names_.push_back(f.item);
    auto& cell = it->second[*col];
    if (cell) {
      throw DataError("knowledge base: item `" + f.item + "` has two values for column `" +
                      f.column + "`");
    }
    cell = f.value;
  }

  for (std::size_t i = 0; i < kb.item_names_.size(); ++i) {
    const std::string& name = kb.item_names_[i];
    const auto& row = rows.at(name);
    for (std::size_t j = 0; j < k; ++j) {
      if (!row[j]) {
        throw DataError("knowledge base: item `" + name + "` lacks column `" + kb.columns_[j] +
                        "`");
      }
      kb.cells_.push_back(*row[j]);
      const std::string key = normalize(*row[j]);
      if (!kb.by_entity_.emplace(key, EntityRef{i, j}).second) {
        throw DataError("knowledge base: duplicate entity `" + *row[j] + "`");
      }
    }
    kb.by_item_.emplace(normalize(name), i);
  }
  return kb;
}

std::optional<KbFact> parse_kb_fact_line(std::string_view body) {
  std::istringstream in{std::string(body)};
  std::vector<std::string> fields;
  std::string tok;
  while (in >> tok) fields.push_back(tok);
  if (fields.size() != 3) return std::nullopt;
  if (fields[1].size() <= kColumnPrefix.size() || !fields[1].starts_with(kColumnPrefix)) {
    return std::nullopt;
  }
  return KbFact{fields[0], fields[1].substr(kColumnPrefix.size()), fields[2]};
}

std::string format_kb_fact(const KbFact& fact) {
  return fact.item + " " + std::string(kColumnPrefix) + fact.column + " " + fact.value;
}

std::vector<KbFact> parse_kb_facts(std::string_view text) {
  std::vector<KbFact> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view body = line;
    while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front()))) {
      body.remove_prefix(1);
    }
    if (body.empty()) continue;
    // Optional leading line number, as in bAbI KB dumps.
    auto space = body.find(' ');
    if (space != std::string_view::npos && is_number(body.substr(0, space))) {
      auto rest = body.substr(space + 1);
      if (auto fact = parse_kb_fact_line(rest)) {
        out.push_back(*fact);
        continue;
      }
    }
    auto fact = parse_kb_fact_line(body);
    if (!fact) throw ParseError(line_no, "expected `<item> R_<column> <value>`");
    out.push_back(*fact);
  }
  return out;
}

std::optional<EntityRef> candidate_entity(std::string_view candidate_text,
                                          const KnowledgeBase& kb) {
  std::optional<EntityRef> found;
  for (const std::string& token : tokenize(candidate_text)) {
    auto ref = kb.resolve(token);
    if (!ref) continue;
    if (found && !(*found == *ref)) {
      throw DataError("candidate mentions more than one KB entity: `" +
                      std::string(candidate_text) + "`");
    }
    found = ref;
  }
  return found;
}

std::vector<std::size_t> mentioned_items(std::span<const std::string> utterances,
                                         const KnowledgeBase& kb, MentionRule rule) {
  std::set<std::size_t> items;
  for (const std::string& u : utterances) {
    for (const std::string& token : tokenize(u)) {
      if (auto item = kb.find_item(token)) {
        items.insert(*item);
      } else if (rule == MentionRule::kAnyEntityOfItem) {
        if (auto ref = kb.resolve(token)) items.insert(ref->item);
      }
    }
  }
  return {items.begin(), items.end()};
}

Vector bias_vector(std::span<const double> preference,
                   std::span<const std::optional<EntityRef>> candidate_entities,
                   std::span<const std::size_t> mentioned) {
  Vector b(candidate_entities.size(), 0.0);
  for (std::size_t k = 0; k < candidate_entities.size(); ++k) {
    const auto& ref = candidate_entities[k];
    if (!ref) continue;
    if (ref->column >= preference.size()) {
      throw std::invalid_argument("bias_vector: preference shorter than column count");
    }
    if (std::binary_search(mentioned.begin(), mentioned.end(), ref->item)) {
      b[k] = preference[ref->column];
    }
  }
  return b;
}

Vector bias_vector(std::span<const double> preference, std::span<const std::string> candidates,
                   std::span<const std::string> context, const KnowledgeBase& kb,
                   MentionRule rule) {
  if (preference.size() != kb.column_count()) {
    throw std::invalid_argument("bias_vector: preference length must equal column count");
  }
  std::vector<std::optional<EntityRef>> refs;
  refs.reserve(candidates.size());
  for (const std::string& c : candidates) refs.push_back(candidate_entity(c, kb));
  const auto mentioned = mentioned_items(context, kb, rule);
  return bias_vector(preference, refs, mentioned);
}

}  // namespace pmemn2n
