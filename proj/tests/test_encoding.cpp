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

#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "pmemn2n/encoding.hpp"
#include "pmemn2n/errors.hpp"

using namespace pmemn2n;

namespace {

ProfileSchema demo_schema() {
  return ProfileSchema({{"gender", {"male", "female"}}, {"age", {"young", "middle-aged", "elderly"}}});
}

}  // namespace

TEST_CASE("tokenize lowercases and strips trailing punctuation") {
  CHECK(tokenize("Hello, World!  i'd like the_place_1.") ==
        std::vector<std::string>{"hello", "world", "i'd", "like", "the_place_1"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("?!") == std::vector<std::string>{});
  CHECK(tokenize("a\tb\nc") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("feature layout: words, then time, then speaker") {
  const std::vector<std::string> texts = {"Book a table", "a table for two"};
  const Vocabulary v = build_vocabulary(texts, 3);
  CHECK(v.words() == std::vector<std::string>{"a", "book", "for", "table", "two"});
  CHECK(v.base_size() == 5);
  CHECK(v.feature_dim() == 5 + 3 + 2);
  CHECK(v.time_id(0) == 5);
  CHECK(v.time_id(2) == 7);
  CHECK_THROWS_AS(v.time_id(3), std::invalid_argument);
  CHECK(v.speaker_id(Speaker::kUser) == 8);
  CHECK(v.speaker_id(Speaker::kBot) == 9);
  CHECK(v.feature_name(6) == "t_1");
  CHECK(v.feature_name(8) == "#u");
  CHECK(v.feature_name(9) == "#r");
  CHECK(v.lookup("table") == 3u);
  CHECK_FALSE(v.lookup("zebra").has_value());
}

TEST_CASE("memory utterances carry time and speaker features; unknown words drop") {
  const std::vector<std::string> texts = {"a b c"};
  const Vocabulary v = build_vocabulary(texts, 4);
  const BagOfWords m = encode_memory_utterance("b B zebra", 2, Speaker::kBot, v);
  CHECK(m.entries == std::vector<BagEntry>{{1, 2}, {5, 1}, {8, 1}});
  const BagOfWords c = encode_candidate("c, a. zebra", v);
  CHECK(c.entries == std::vector<BagEntry>{{0, 1}, {2, 1}});
  CHECK(encode_candidate("zebra", v).empty());
}

TEST_CASE("bag embedding equals the dense product") {
  Matrix e(2, 4);
  for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] = static_cast<double>(i) - 3.0;
  const std::vector<std::size_t> ids = {0, 3, 3};
  const BagOfWords bag = BagOfWords::from_ids(ids);
  CHECK(bag.count(3) == 2);
  CHECK(bag.count(1) == 0);
  const std::vector<double> dense = {1, 0, 0, 2};
  CHECK(embed_bag(bag, e) == matvec(e, dense));
  Matrix g(2, 4);
  accumulate_bag_gradient(bag, std::vector<double>{1.0, -1.0}, g);
  CHECK(g(0, 3) == 2.0);
  CHECK(g(1, 3) == -2.0);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(0, 1) == 0.0);
}

TEST_CASE("vocabulary serialization round trips and rejects bad input") {
  const std::vector<std::string> texts = {"x y z"};
  const Vocabulary v = build_vocabulary(texts, 7);
  const Vocabulary w = Vocabulary::deserialize(v.serialize());
  CHECK(w.words() == v.words());
  CHECK(w.time_feature_count() == 7);
  CHECK(w.fingerprint() == v.fingerprint());
  CHECK_THROWS_AS(Vocabulary::deserialize(""), ParseError);
  CHECK_THROWS_AS(Vocabulary::deserialize("2 1\nb\na\n"), ParseError);
  CHECK_THROWS_AS(Vocabulary::deserialize("3 1\na\n"), ParseError);
}

TEST_CASE("profiles encode as concatenated one-hot blocks") {
  const ProfileSchema s = demo_schema();
  CHECK(s.onehot_dim() == 5);
  const Profile p = {{"gender", "female"}, {"age", "elderly"}};
  CHECK(encode_profile(p, s) == Vector{0, 1, 0, 0, 1});
  CHECK(s.label(p) == "female elderly");
  CHECK(s.to_values(p) == std::vector<std::string>{"female", "elderly"});
  const std::vector<std::string> values = {"male", "young"};
  CHECK(encode_profile(s.from_values(values), s) == Vector{1, 0, 1, 0, 0});
  CHECK(s.all_profiles().size() == 6);
  CHECK_THROWS_WITH_AS(encode_profile({{"gender", "male"}}, s), doctest::Contains("age"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(encode_profile({{"gender", "other"}, {"age", "young"}}, s),
                       doctest::Contains("gender"), std::invalid_argument);
}

TEST_CASE("every profile encodes to a distinct vector with one 1 per attribute") {
  const ProfileSchema s = demo_schema();
  std::vector<Vector> seen;
  for (const Profile& p : s.all_profiles()) {
    const Vector a = encode_profile(p, s);
    double total = 0.0;
    for (double x : a) total += x;
    CHECK(total == 2.0);
    for (const Vector& b : seen) CHECK_FALSE(a == b);
    seen.push_back(a);
  }
}

TEST_CASE("schema serialization round trips") {
  const ProfileSchema s = demo_schema();
  const ProfileSchema t = ProfileSchema::deserialize(s.serialize());
  CHECK(t.serialize() == s.serialize());
  CHECK(t.fingerprint() == s.fingerprint());
  CHECK_THROWS_AS(ProfileSchema::deserialize("gender\n"), ParseError);
}
