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

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pmemn2n/synthetic.hpp"

using namespace pmemn2n;
namespace fs = std::filesystem;

namespace {

SyntheticConfig config_for(std::vector<int> tasks, std::size_t train = 20) {
  SyntheticConfig c;
  c.tasks = std::move(tasks);
  c.train = train;
  c.dev = 6;
  c.test = 6;
  return c;
}

std::vector<const Exchange*> exchanges(const Dialog& d) {
  std::vector<const Exchange*> out;
  for (const DialogEvent& e : d.events) {
    if (const auto* ex = std::get_if<Exchange>(&e)) out.push_back(ex);
  }
  return out;
}

std::string all_text(const Corpus& c) {
  std::string out;
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    out += serialize_dialogs(c.split(s), c.schema);
  }
  return out + serialize_candidates(c.candidates) + c.kb.serialize();
}

// Integer value of a KB fact attached to `item` within the dialog.
int fact_value(const Dialog& d, const std::string& item, const std::string& column) {
  for (const DialogEvent& e : d.events) {
    if (const auto* f = std::get_if<KbFact>(&e)) {
      if (f->item == item && f->column == column) return std::stoi(f->value);
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("the generator is deterministic in its seed") {
  const auto cfg = config_for({1, 2, 3, 4, 5});
  CHECK(all_text(generate_synthetic(cfg).corpus) == all_text(generate_synthetic(cfg).corpus));
  auto other = cfg;
  other.seed = 2;
  CHECK(all_text(generate_synthetic(other).corpus) != all_text(generate_synthetic(cfg).corpus));
}

TEST_CASE("split sizes and task ids follow the config") {
  const auto syn = generate_synthetic(config_for({1, 3}, 10));
  CHECK(syn.corpus.train.size() == 20);
  CHECK(syn.corpus.dev.size() == 12);
  CHECK(syn.corpus.test.size() == 12);
  std::set<int> tasks;
  for (const Dialog& d : syn.corpus.train) tasks.insert(d.task_id);
  CHECK(tasks == std::set<int>{1, 3});
  CHECK(syn.corpus.kb.column_count() == 2);
  CHECK(generate_synthetic(config_for({1, 2})).corpus.kb.item_count() == 0);
}

TEST_CASE("contact responses follow the planted column rule") {
  const auto syn = generate_synthetic(config_for({4, 5}, 30));
  std::size_t contacts = 0;
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    for (const Dialog& d : syn.corpus.split(s)) {
      for (const Exchange* ex : exchanges(d)) {
        if (ex->bot.rfind("here it is ", 0) != 0) continue;
        ++contacts;
        const auto ref = candidate_entity(ex->bot, syn.corpus.kb);
        REQUIRE(ref.has_value());
        CHECK(syn.corpus.kb.columns()[ref->column] == preferred_column(d.profile));
      }
    }
  }
  CHECK(contacts >= 60);
  CHECK(preferred_column({{"age", "young"}, {"gender", "female"}}) == "social");
  CHECK(preferred_column({{"age", "elderly"}, {"gender", "male"}}) == "phone");
}

TEST_CASE("task 4 dialogs come in content-matched pairs with opposite preferences") {
  const auto syn = generate_synthetic(config_for({4}, 40));
  const auto& train = syn.corpus.train;
  REQUIRE(train.size() == 40);
  for (std::size_t i = 0; i + 1 < train.size(); i += 2) {
    const auto a = exchanges(train[i]);
    const auto b = exchanges(train[i + 1]);
    REQUIRE(a.size() == b.size());
    CHECK(preferred_column(train[i].profile) != preferred_column(train[i + 1].profile));
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k]->user == b[k]->user);
      if (a[k]->bot.rfind("here it is ", 0) != 0) CHECK(a[k]->bot == b[k]->bot);
    }
    // No styled phrase leaks the profile.
    for (const Exchange* ex : a) CHECK(syn.candidate_groups.count(ex->bot) == 0);
  }
}

TEST_CASE("option order follows popularity for young users and rating otherwise") {
  const auto syn = generate_synthetic(config_for({3}, 30));
  for (const Dialog& d : syn.corpus.train) {
    std::vector<std::string> proposed;
    for (const Exchange* ex : exchanges(d)) {
      const auto pos = ex->bot.find("what do you think of this option: ");
      if (pos != std::string::npos) proposed.push_back(ex->bot.substr(ex->bot.rfind(' ') + 1));
    }
    REQUIRE_FALSE(proposed.empty());
    const std::string key = preferred_column(d.profile) == "social" ? "popularity" : "rating";
    for (std::size_t i = 1; i < proposed.size(); ++i) {
      CHECK(fact_value(d, proposed[i - 1], key) > fact_value(d, proposed[i], key));
    }
  }
}

TEST_CASE("styled candidates are grouped by the profile they address") {
  const auto syn = generate_synthetic(config_for({1}));
  std::set<std::string> labels;
  for (const Profile& p : syn.corpus.schema.all_profiles()) labels.insert(syn.corpus.schema.label(p));
  CHECK_FALSE(syn.candidate_groups.empty());
  const std::map<std::string, std::string> prefixes = {
      {"male young", "hey dude "},        {"female young", "hey girl "},
      {"male middle-aged", "well sir "},  {"female middle-aged", "well madam "},
      {"male elderly", "dear sir "},      {"female elderly", "dear madam "}};
  for (const auto& [text, label] : syn.candidate_groups) {
    CHECK(labels.count(label) == 1);
    CHECK(text.rfind(prefixes.at(label), 0) == 0);
  }
  // Every bot turn of a styled dialog except the API call uses its own style.
  for (const Dialog& d : syn.corpus.train) {
    const std::string label = syn.corpus.schema.label(d.profile);
    for (const Exchange* ex : exchanges(d)) {
      if (ex->bot.rfind("api_call", 0) == 0) continue;
      CHECK(syn.candidate_groups.at(ex->bot) == label);
    }
  }
}

TEST_CASE("unstyled corpora have no groups") {
  auto cfg = config_for({1});
  cfg.styled = false;
  CHECK(generate_synthetic(cfg).candidate_groups.empty());
}

TEST_CASE("task 5 combines updates, options and contact") {
  const auto syn = generate_synthetic(config_for({5}, 5));
  for (const Dialog& d : syn.corpus.train) {
    std::size_t api_calls = 0, options = 0, contacts = 0;
    for (const Exchange* ex : exchanges(d)) {
      api_calls += ex->bot.rfind("api_call", 0) == 0;
      options += ex->bot.find("this option:") != std::string::npos;
      contacts += ex->bot.rfind("here it is", 0) == 0;
    }
    CHECK(api_calls == 2);
    CHECK(options >= 1);
    CHECK(contacts == 1);
  }
}

TEST_CASE("config parsing and validation") {
  const auto c = SyntheticConfig::from_json(R"({"seed": 9, "tasks": [1, 4], "dialogs": 100})");
  CHECK(c.seed == 9);
  CHECK(c.train == 70);
  CHECK(c.dev == 15);
  CHECK(c.test == 15);
  CHECK(SyntheticConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(SyntheticConfig::from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticConfig::from_json(R"({"tasks": [6]})"), std::invalid_argument);
  CHECK_THROWS_AS(SyntheticConfig::from_json(R"({"tasks": [4], "kb_columns": ["phone"]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(SyntheticConfig::from_json(R"({"schema": [{"key": "height", "values": ["tall"]}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(SyntheticConfig::from_json(R"({"train": 0})"), std::invalid_argument);
}

TEST_CASE("saved corpora reload with their candidate groups") {
  const fs::path dir = fs::temp_directory_path() / "pmemn2n_test_synthetic";
  fs::remove_all(dir);
  const auto cfg = config_for({1, 4});
  const auto syn = generate_synthetic(cfg);
  save_synthetic(syn, cfg, dir);
  const Corpus back = load_corpus(dir);
  CHECK(all_text(back) == all_text(syn.corpus));
  CHECK(load_candidate_groups(dir) == syn.candidate_groups);
  CHECK(fs::exists(dir / "generator.json"));
  fs::remove_all(dir);
}
