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

#include <bit>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "pmemn2n/checkpoint.hpp"
#include "pmemn2n/errors.hpp"
#include "pmemn2n/synthetic.hpp"

using namespace pmemn2n;
namespace fs = std::filesystem;

namespace {

struct Bundle {
  SyntheticCorpus syn;
  Dataset ds;
  Checkpoint ckpt;
};

Bundle make_bundle(std::uint64_t seed = 1) {
  SyntheticConfig sc;
  sc.seed = seed;
  sc.tasks = {4};
  sc.train = 6;
  sc.dev = 2;
  sc.test = 2;
  Bundle b;
  b.syn = generate_synthetic(sc);
  DatasetOptions o;
  o.time_features = 40;
  o.context_cap = 40;
  o.global_source = GlobalSource::kRandomUsers;
  o.mention_rule = MentionRule::kAnyEntityOfItem;
  b.ds = build_dataset(b.syn.corpus, o);
  ModelConfig m;
  m.embedding_dim = 6;
  m.hops = 2;
  m.use_global_memory = false;
  TrainConfig t;
  t.learning_rate = 0.0123456789;
  t.seed = 77;
  const ModelShapes shapes = dataset_shapes(b.ds, b.syn.corpus.schema, b.syn.corpus.kb, 6);
  TrainState st = TrainState::fresh(shapes, 3);
  st.epoch = 12;
  // Awkward doubles: subnormals, extremes, negative zero, non-terminating.
  st.params.A(0, 0) = std::numeric_limits<double>::denorm_min();
  st.params.A(0, 1) = -0.0;
  st.params.A(0, 2) = std::numeric_limits<double>::max();
  st.params.A(0, 3) = 1.0 / 3.0;
  st.params.W(1, 1) = 0.1 + 0.2;
  st.velocity.E(0, 0) = -std::numeric_limits<double>::min();
  b.ckpt = Checkpoint::capture(m, t, b.ds, b.syn.corpus, st);
  return b;
}

bool bitwise_equal(const ModelParameters& a, const ModelParameters& b) {
  auto x = a.all();
  auto y = b.all();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!x[k]->same_shape(*y[k])) return false;
    for (std::size_t i = 0; i < x[k]->size(); ++i) {
      if (std::bit_cast<std::uint64_t>(x[k]->data()[i]) !=
          std::bit_cast<std::uint64_t>(y[k]->data()[i])) {
        return false;
      }
    }
  }
  return true;
}

std::string tamper(const std::string& text, const std::string& key, const nlohmann::json& value) {
  auto j = nlohmann::json::parse(text);
  j[key] = value;
  return j.dump();
}

}  // namespace

TEST_CASE("checkpoints round trip bit for bit") {
  const Bundle b = make_bundle();
  const std::string text = b.ckpt.to_json();
  const Checkpoint back = Checkpoint::from_json(text);
  CHECK(bitwise_equal(back.state.params, b.ckpt.state.params));
  CHECK(bitwise_equal(back.state.velocity, b.ckpt.state.velocity));
  CHECK(std::signbit(back.state.params.A(0, 1)));
  CHECK(back.state.epoch == 12);
  CHECK(back.model == b.ckpt.model);
  CHECK(back.train == b.ckpt.train);
  CHECK(back.data.global_source == GlobalSource::kRandomUsers);
  CHECK(back.data.mention_rule == MentionRule::kAnyEntityOfItem);
  CHECK(back.vocab.words() == b.ds.vocab.words());
  CHECK(back.candidates == b.syn.corpus.candidates);
  CHECK(back.kb.facts() == b.syn.corpus.kb.facts());
  CHECK(back.corpus_fingerprint == b.syn.corpus.fingerprint());
  CHECK(back.to_json() == text);
}

TEST_CASE("checkpoint files round trip") {
  const Bundle b = make_bundle();
  const fs::path dir = fs::temp_directory_path() / "pmemn2n_test_ckpt";
  fs::remove_all(dir);
  const fs::path file = dir / "nested" / "model.json";
  b.ckpt.save(file);
  const Checkpoint back = Checkpoint::load(file);
  CHECK(bitwise_equal(back.state.params, b.ckpt.state.params));
  CHECK_THROWS_AS(Checkpoint::load(dir / "missing.json"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("damaged checkpoints are rejected") {
  const Bundle b = make_bundle();
  const std::string text = b.ckpt.to_json();
  CHECK_THROWS_AS(Checkpoint::from_json(text.substr(0, text.size() / 2)), DataError);
  CHECK_THROWS_AS(Checkpoint::from_json("{}"), DataError);
  CHECK_THROWS_WITH_AS(Checkpoint::from_json(tamper(text, "version", 99)),
                       doctest::Contains("version"), DataError);
  CHECK_THROWS_AS(Checkpoint::from_json(tamper(text, "format", "other")), DataError);

  auto j = nlohmann::json::parse(text);
  j["candidates"][0] = "something else";
  CHECK_THROWS_WITH_AS(Checkpoint::from_json(j.dump()), doctest::Contains("candidates fingerprint"),
                       DataError);

  j = nlohmann::json::parse(text);
  std::string vocab = j["vocab"];
  vocab += "zzzz_extra\n";
  vocab.replace(0, vocab.find(' '), std::to_string(b.ds.vocab.base_size() + 1));
  j["vocab"] = vocab;
  CHECK_THROWS_WITH_AS(Checkpoint::from_json(j.dump()), doctest::Contains("vocab fingerprint"),
                       DataError);

  j = nlohmann::json::parse(text);
  j["params"]["A"]["cols"] = 3;
  CHECK_THROWS_AS(Checkpoint::from_json(j.dump()), DataError);

  j = nlohmann::json::parse(text);
  j["model"]["embedding_dim"] = 7;
  CHECK_THROWS_WITH_AS(Checkpoint::from_json(j.dump()), doctest::Contains("shapes"), DataError);

  j = nlohmann::json::parse(text);
  j["data"]["global_source"] = "sideways";
  CHECK_THROWS_AS(Checkpoint::from_json(j.dump()), DataError);
}

TEST_CASE("compatibility check names the differing component") {
  const Bundle b = make_bundle(1);
  CHECK_NOTHROW(b.ckpt.check_compatible(b.ds, b.syn.corpus));
  const Bundle other = make_bundle(2);
  CHECK_THROWS_WITH_AS(b.ckpt.check_compatible(other.ds, other.syn.corpus),
                       doctest::Contains("differs"), DataError);
  Corpus renamed = b.syn.corpus;
  renamed.candidates.push_back("a brand new response");
  const Dataset ds = build_dataset(renamed, b.ds.options);
  CHECK_THROWS_WITH_AS(b.ckpt.check_compatible(ds, renamed), doctest::Contains("vocabulary"),
                       DataError);
}

TEST_CASE("enum names round trip") {
  for (GlobalSource s : {GlobalSource::kSimilarUsers, GlobalSource::kRandomUsers}) {
    CHECK(parse_global_source(to_string(s)) == s);
  }
  for (GlobalContent c : {GlobalContent::kBoth, GlobalContent::kUserOnly, GlobalContent::kBotOnly}) {
    CHECK(parse_global_content(to_string(c)) == c);
  }
  CHECK_THROWS_AS(parse_global_content("all"), std::invalid_argument);
}
