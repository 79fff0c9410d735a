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

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pmemn2n/eval.hpp"
#include "pmemn2n/synthetic.hpp"

using namespace pmemn2n;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ProfileSchema one_attribute() { return ProfileSchema({{"age", {"young", "old", "ancient"}}}); }

CandidateSet two_candidates() {
  CandidateSet c;
  c.texts = {"a", "b", "c"};
  c.bags = {BagOfWords::from_ids(std::vector<std::size_t>{0}),
            BagOfWords::from_ids(std::vector<std::size_t>{1}),
            BagOfWords::from_ids(std::vector<std::size_t>{0, 1})};
  c.entities = {std::nullopt, EntityRef{0, 1}, std::nullopt};
  return c;
}

TrainConfig quick_train() {
  TrainConfig t;
  t.learning_rate = 0.01;
  t.max_epochs = 2;
  t.batch_size = 8;
  return t;
}

}  // namespace

TEST_CASE("tendency confusion matches sigmoid of hand-set embeddings") {
  // d = 2. Candidate "a" embeds to (1, 0), "b" to (0, 1); profile
  // "young" maps to (2, 0), "old" to (0, -1), "ancient" to (0, 0).
  ModelParameters p = ModelParameters::zeros({2, 2, 3, 1});
  p.W(0, 0) = 1.0;
  p.W(1, 1) = 1.0;
  p.P(0, 0) = 2.0;
  p.P(1, 1) = -1.0;
  const std::map<std::string, std::string> groups = {{"a", "young"}, {"b", "old"}};
  const TendencyMatrix m = tendency_confusion(p, one_attribute(), two_candidates(), groups);
  CHECK(m.profiles == std::vector<std::string>{"young", "old", "ancient"});
  CHECK(m.group_sizes == std::vector<std::size_t>{1, 1, 0});
  CHECK(*m.values[0][0] == doctest::Approx(sig(2.0)));
  CHECK(*m.values[0][1] == doctest::Approx(0.5));
  CHECK(*m.values[1][0] == doctest::Approx(0.5));
  CHECK(*m.values[1][1] == doctest::Approx(sig(-1.0)));
  CHECK(*m.values[2][0] == doctest::Approx(0.5));
  CHECK_FALSE(m.values[0][2].has_value());
  CHECK(m.diagonal_mean == doctest::Approx((sig(2.0) + sig(-1.0)) / 2));
  CHECK(m.off_diagonal_mean == doctest::Approx(0.5));
  const std::string csv = m.to_csv();
  CHECK(csv.rfind("profile,young,old,ancient\nyoung,0.880797,0.500000,\n", 0) == 0);
}

TEST_CASE("preference scores are L2-normalised ReLU outputs") {
  ModelParameters p = ModelParameters::zeros({2, 2, 3, 2});
  p.E(0, 0) = 3.0;
  p.E(1, 0) = 4.0;
  p.E(0, 1) = -1.0;
  p.E(1, 1) = 2.0;
  p.E(0, 2) = -1.0;
  p.E(1, 2) = -1.0;
  const auto rows = preference_scores(p, one_attribute());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].raw == Vector{3.0, 4.0});
  CHECK(rows[0].scores[0] == doctest::Approx(0.6));
  CHECK(rows[0].scores[1] == doctest::Approx(0.8));
  CHECK(rows[1].scores == Vector{0.0, 1.0});
  CHECK(rows[2].degenerate);
  CHECK(rows[2].scores == Vector{0.0, 0.0});
  CHECK(preference_csv(rows, {"phone", "social"}) ==
        "profile,phone,social,degenerate\n"
        "young,0.600000,0.800000,0\n"
        "old,0.000000,1.000000,0\n"
        "ancient,0.000000,0.000000,1\n");
}

TEST_CASE("candidate groups are inferred from pure, frequent responses") {
  Corpus c;
  c.schema = one_attribute();
  c.candidates = {"yo", "greetings", "hello", "rare"};
  c.train = parse_dialogs(
      "1 young\n2 hi\tyo\n3 hi\thello\n\n"
      "1 young\n2 hi\tyo\n3 hi\thello\n\n"
      "1 old\n2 hi\tgreetings\n3 hi\thello\n4 x\trare\n\n"
      "1 old\n2 hi\tgreetings\n",
      c.schema, 1);
  const auto groups = infer_candidate_groups(c);
  CHECK(groups == std::map<std::string, std::string>{{"greetings", "old"}, {"yo", "young"}});
  const auto loose = infer_candidate_groups(c, 0.6, 1);
  CHECK(loose.at("hello") == "young");
  CHECK(loose.at("rare") == "old");
}

TEST_CASE("ambiguous turns are those whose gold response names an entity") {
  const CandidateSet c = two_candidates();
  DialogInstance inst;
  inst.true_index = 1;
  CHECK(is_ambiguous_turn(inst, c));
  inst.true_index = 0;
  CHECK_FALSE(is_ambiguous_turn(inst, c));
}

TEST_CASE("per-task accuracy and task subsets") {
  SyntheticConfig sc;
  sc.tasks = {1, 2};
  sc.train = 4;
  sc.dev = 2;
  sc.test = 2;
  const Corpus corpus = generate_synthetic(sc).corpus;
  CHECK(corpus_tasks(corpus) == std::vector<int>{1, 2});
  const Corpus only2 = task_subset(corpus, 2);
  CHECK(only2.train.size() == 4);
  CHECK(corpus_tasks(only2) == std::vector<int>{2});
  CHECK(only2.candidates == corpus.candidates);

  DatasetOptions o;
  o.time_features = 48;
  o.context_cap = 48;
  o.build_global_memory = false;
  const Dataset ds = build_dataset(corpus, o);
  ModelConfig m;
  m.embedding_dim = 4;
  m.hops = 1;
  m.use_global_memory = false;
  const auto shapes = dataset_shapes(ds, corpus.schema, corpus.kb, 4);
  const TrainState st = TrainState::fresh(shapes, 1);
  // Relabel so task 1 is always right and task 2 always wrong.
  std::vector<DialogInstance> items = ds.test.items;
  const auto preds = predict_all(st.params, items, m, ds.shared());
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].true_index = items[i].task_id == 1 ? preds[i] : (preds[i] + 1) % ds.candidates.size();
  }
  const auto by_task = accuracy_by_task(st.params, items, m, ds.shared());
  CHECK(by_task.at(1) == 1.0);
  CHECK(by_task.at(2) == 0.0);
}

TEST_CASE("standard ablation variants") {
  ModelConfig base;
  base.embedding_dim = 16;
  const auto v = standard_variants(base);
  REQUIRE(v.size() == 6);
  CHECK(v[0].name == "baseline");
  CHECK(v[0].profile_as_utterance);
  CHECK(v[0].model.components() == "none");
  CHECK(v[1].model.components() == "profile");
  CHECK(v[2].model.components() == "global");
  CHECK(v[3].model.components() == "profile,global");
  CHECK(v[4].model.components() == "preference");
  CHECK(v[5].model.components() == "profile,global,preference");
  for (const auto& x : v) CHECK(x.model.embedding_dim == 16);
}

TEST_CASE("ablation csv layout") {
  const std::vector<AblationCell> cells = {{"baseline", 1, 0.5, 0, 0, 0},
                                           {"baseline", 3, 0.25, 0, 0, 0},
                                           {"combined", 1, 0.98765, 0, 0, 0}};
  CHECK(ablation_csv(cells) == "model,task1,task3\nbaseline,50.00,25.00\ncombined,98.77,\n");
}

TEST_CASE("ablation grid trains every variant on every task") {
  SyntheticConfig sc;
  sc.tasks = {1, 4};
  sc.train = 4;
  sc.dev = 2;
  sc.test = 2;
  const Corpus corpus = generate_synthetic(sc).corpus;
  ModelConfig base;
  base.embedding_dim = 4;
  base.hops = 1;
  base.context_cap = 48;
  base.global_cap = 10;
  auto variants = standard_variants(base);
  variants.resize(2);
  DatasetOptions o;
  o.time_features = 48;
  std::vector<std::string> seen;
  const auto cells = ablation_grid(corpus, variants, {}, o, quick_train(),
                                   [&](const AblationCell& c) {
                                     seen.push_back(c.variant + std::to_string(c.task));
                                   });
  CHECK(seen == std::vector<std::string>{"baseline1", "profile_embedding1", "baseline4",
                                         "profile_embedding4"});
  for (const auto& c : cells) {
    CHECK(c.test_accuracy >= 0.0);
    CHECK(c.test_accuracy <= 1.0);
  }
}

TEST_CASE("global memory control reports both runs") {
  SyntheticConfig sc;
  sc.tasks = {1};
  sc.train = 6;
  sc.dev = 2;
  sc.test = 2;
  sc.schema = {{"age", {"young"}}};
  const Corpus corpus = generate_synthetic(sc).corpus;
  ModelConfig m;
  m.embedding_dim = 4;
  m.hops = 1;
  m.use_profile_embedding = false;
  m.use_preference = false;
  m.context_cap = 48;
  m.global_cap = 1000;  // no subsampling
  DatasetOptions o;
  o.time_features = 48;
  const auto r = global_memory_control(corpus, m, o, quick_train());
  CHECK(r.single_profile);
  // With one profile, similar users are every other user, so both pools
  // hold the same dialogs.
  CHECK(r.similar_accuracy == r.random_accuracy);
}

TEST_CASE("manifest records seeds, hashes and the corpus fingerprint") {
  SyntheticConfig sc;
  sc.train = 2;
  sc.dev = 1;
  sc.test = 1;
  const Corpus corpus = generate_synthetic(sc).corpus;
  TrainConfig t;
  t.seed = 99;
  const auto text = manifest_json("train", corpus, ModelConfig{}, DatasetOptions{}, t);
  const auto j = nlohmann::json::parse(text);
  CHECK(j["command"] == "train");
  CHECK(j["seeds"]["train"] == 99);
  CHECK(j["config_hashes"]["model"].get<std::string>().size() == 16);
  CHECK(j["model"]["hops"] == 3);
  CHECK(text == manifest_json("train", corpus, ModelConfig{}, DatasetOptions{}, t));
}
