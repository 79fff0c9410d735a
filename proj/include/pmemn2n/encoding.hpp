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

#ifndef PMEMN2N_ENCODING_HPP_
#define PMEMN2N_ENCODING_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pmemn2n/numerics.hpp"

namespace pmemn2n {

inline constexpr std::size_t kDefaultTimeFeatures = 1000;

// Lowercases, splits on whitespace and strips trailing punctuation from
// each token. Underscore-joined entities stay whole.
std::vector<std::string> tokenize(std::string_view text);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

enum class Speaker { kUser, kBot };

// Feature layout: [0, V) content words in lexicographic order, [V, V+T)
// time features t_0..t_{T-1}, then the #u and #r speaker features.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> words, std::size_t time_feature_count);

  std::size_t base_size() const { return words_.size(); }
  std::size_t time_feature_count() const { return time_features_; }
  std::size_t feature_dim() const { return words_.size() + time_features_ + 2; }

  // Unknown tokens resolve to std::nullopt; encoders drop them.
  std::optional<std::size_t> lookup(std::string_view token) const;
  std::size_t time_id(std::size_t turn_index) const;
  std::size_t speaker_id(Speaker speaker) const;
  const std::vector<std::string>& words() const { return words_; }
  // Human-readable name of any feature id (word, "t_<i>", "#u", "#r").
  std::string feature_name(std::size_t id) const;

  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> words_;
  std::size_t time_features_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

Vocabulary build_vocabulary(std::span<const std::string> texts,
                            std::size_t time_feature_count = kDefaultTimeFeatures);

struct BagEntry {
  std::uint32_t id = 0;
  std::uint32_t count = 0;
  friend bool operator==(const BagEntry&, const BagEntry&) = default;
};

// Sparse feature counts, sorted by id with unique ids.
struct BagOfWords {
  std::vector<BagEntry> entries;

  bool empty() const { return entries.empty(); }
  std::uint32_t count(std::size_t id) const;
  friend bool operator==(const BagOfWords&, const BagOfWords&) = default;

  static BagOfWords from_ids(std::span<const std::size_t> ids);
};

BagOfWords encode_memory_utterance(std::string_view text, std::size_t turn_index,
                                   Speaker speaker, const Vocabulary& vocab);
BagOfWords encode_candidate(std::string_view text, const Vocabulary& vocab);

// Sum of count * column(id) of a d x F embedding matrix.
Vector embed_bag(const BagOfWords& bag, const Matrix& embedding);
void embed_bag_into(const BagOfWords& bag, const Matrix& embedding, std::span<double> out);
// grad(:, id) += count * upstream for every entry of the bag.
void accumulate_bag_gradient(const BagOfWords& bag, std::span<const double> upstream,
                             Matrix& grad);

using Profile = std::map<std::string, std::string>;

class ProfileSchema {
 public:
  struct Attribute {
    std::string key;
    std::vector<std::string> values;
  };

  ProfileSchema() = default;
  explicit ProfileSchema(std::vector<Attribute> attributes);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t attribute_count() const { return attributes_.size(); }
  std::size_t onehot_dim() const { return onehot_dim_; }

  // Profile from values listed in attribute order (dialog-file header).
  Profile from_values(std::span<const std::string> values) const;
  std::vector<std::string> to_values(const Profile& profile) const;
  // "male young" style label in attribute order.
  std::string label(const Profile& profile) const;
  // Every attribute-value combination, in lexicographic attribute order.
  std::vector<Profile> all_profiles() const;

  // One line per attribute: `key value_1 value_2 ...`.
  std::string serialize() const;
  static ProfileSchema deserialize(std::string_view text);
  std::uint64_t fingerprint() const;

 private:
  std::vector<Attribute> attributes_;
  std::size_t onehot_dim_ = 0;
};

// Concatenated one-hot blocks in schema order. Throws std::invalid_argument
// naming the offending key when a key is missing or its value unknown.
Vector encode_profile(const Profile& profile, const ProfileSchema& schema);

}  // namespace pmemn2n

#endif  // PMEMN2N_ENCODING_HPP_
