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

#include "pmemn2n/encoding.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pmemn2n/errors.hpp"

namespace pmemn2n {

namespace {

bool is_trailing_punct(char c) {
  return c == '.' || c == ',' || c == '?' || c == '!' || c == ';' || c == ':';
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

BagOfWords bag_from_counts(const std::map<std::size_t, std::uint32_t>& counts) {
  BagOfWords bag;
  bag.entries.reserve(counts.size());
  for (const auto& [id, n] : counts) {
    bag.entries.push_back({static_cast<std::uint32_t>(id), n});
  }
  return bag;
}

void add_words(std::string_view text, const Vocabulary& vocab,
               std::map<std::size_t, std::uint32_t>& counts) {
  for (const std::string& token : tokenize(text)) {
    if (auto id = vocab.lookup(token)) ++counts[*id];
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && is_trailing_punct(current.back())) current.pop_back();
    if (!current.empty()) tokens.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return tokens;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::size_t time_feature_count)
    : words_(std::move(words)), time_features_(time_feature_count) {
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
}

std::optional<std::size_t> Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::time_id(std::size_t turn_index) const {
  if (turn_index >= time_features_) {
    throw std::invalid_argument("turn index " + std::to_string(turn_index) +
                                " exceeds time feature count " +
                                std::to_string(time_features_));
  }
  return words_.size() + turn_index;
}

std::size_t Vocabulary::speaker_id(Speaker speaker) const {
  return words_.size() + time_features_ + (speaker == Speaker::kUser ? 0 : 1);
}

std::string Vocabulary::feature_name(std::size_t id) const {
  if (id < words_.size()) return words_[id];
  if (id < words_.size() + time_features_) return "t_" + std::to_string(id - words_.size());
  if (id == speaker_id(Speaker::kUser)) return "#u";
  if (id == speaker_id(Speaker::kBot)) return "#r";
  throw std::invalid_argument("feature id out of range: " + std::to_string(id));
}

std::string Vocabulary::serialize() const {
  std::string out = std::to_string(words_.size()) + " " + std::to_string(time_features_) + "\n";
  for (const std::string& w : words_) {
    out += w;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(1, "vocabulary: missing `V T` header");
  const auto header = split_ws(lines[0]);
  if (header.size() != 2) throw ParseError(1, "vocabulary: header must be `V T`");
  std::size_t v = 0;
  std::size_t t = 0;
  try {
    v = std::stoul(header[0]);
    t = std::stoul(header[1]);
  } catch (const std::exception&) {
    throw ParseError(1, "vocabulary: non-numeric header");
  }
  if (lines.size() < v + 1) throw ParseError(lines.size(), "vocabulary: truncated word list");
  std::vector<std::string> words(lines.begin() + 1, lines.begin() + 1 + static_cast<long>(v));
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].empty()) throw ParseError(i + 2, "vocabulary: empty token");
    if (i > 0 && words[i] <= words[i - 1]) {
      throw ParseError(i + 2, "vocabulary: tokens must be sorted and unique");
    }
  }
  return Vocabulary(std::move(words), t);
}

std::uint64_t Vocabulary::fingerprint() const { return fnv1a(serialize()); }

Vocabulary build_vocabulary(std::span<const std::string> texts,
                            std::size_t time_feature_count) {
  std::set<std::string> words;
  for (const std::string& text : texts) {
    for (std::string& token : tokenize(text)) words.insert(std::move(token));
  }
  return Vocabulary(std::vector<std::string>(words.begin(), words.end()), time_feature_count);
}

std::uint32_t BagOfWords::count(std::size_t id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), id,
                             [](const BagEntry& e, std::size_t v) { return e.id < v; });
  return (it != entries.end() && it->id == id) ? it->count : 0;
}

BagOfWords BagOfWords::from_ids(std::span<const std::size_t> ids) {
  std::map<std::size_t, std::uint32_t> counts;
  for (std::size_t id : ids) ++counts[id];
  return bag_from_counts(counts);
}

BagOfWords encode_memory_utterance(std::string_view text, std::size_t turn_index,
                                   Speaker speaker, const Vocabulary& vocab) {
  std::map<std::size_t, std::uint32_t> counts;
  ++counts[vocab.time_id(turn_index)];
  ++counts[vocab.speaker_id(speaker)];
  add_words(text, vocab, counts);
  return bag_from_counts(counts);
}

BagOfWords encode_candidate(std::string_view text, const Vocabulary& vocab) {
  std::map<std::size_t, std::uint32_t> counts;
  add_words(text, vocab, counts);
  return bag_from_counts(counts);
}

Vector embed_bag(const BagOfWords& bag, const Matrix& embedding) {
  Vector out(embedding.rows(), 0.0);
  embed_bag_into(bag, embedding, out);
  return out;
}

void embed_bag_into(const BagOfWords& bag, const Matrix& embedding, std::span<double> out) {
  if (out.size() != embedding.rows()) throw std::invalid_argument("embed_bag: output length");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t cols = embedding.cols();
  const auto data = embedding.data();
  for (const BagEntry& e : bag.entries) {
    if (e.id >= cols) {
      throw std::invalid_argument("embed_bag: feature id " + std::to_string(e.id) +
                                  " out of range");
    }
    const double c = e.count;
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += c * data[r * cols + e.id];
  }
}

void accumulate_bag_gradient(const BagOfWords& bag, std::span<const double> upstream,
                             Matrix& grad) {
  if (upstream.size() != grad.rows()) {
    throw std::invalid_argument("accumulate_bag_gradient: upstream length");
  }
  const std::size_t cols = grad.cols();
  auto data = grad.data();
  for (const BagEntry& e : bag.entries) {
    if (e.id >= cols) throw std::invalid_argument("accumulate_bag_gradient: id out of range");
    const double c = e.count;
    for (std::size_t r = 0; r < upstream.size(); ++r) data[r * cols + e.id] += c * upstream[r];
  }
}

ProfileSchema::ProfileSchema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
  std::set<std::string> keys;
  for (const Attribute& a : attributes_) {
    if (a.key.empty()) throw std::invalid_argument("profile schema: empty key");
    if (!keys.insert(a.key).second) {
      throw std::invalid_argument("profile schema: duplicate key " + a.key);
    }
    if (a.values.empty()) throw std::invalid_argument("profile schema: no values for " + a.key);
    std::set<std::string> seen(a.values.begin(), a.values.end());
    if (seen.size() != a.values.size()) {
      throw std::invalid_argument("profile schema: duplicate value for " + a.key);
    }
    onehot_dim_ += a.values.size();
  }
}

Profile ProfileSchema::from_values(std::span<const std::string> values) const {
  if (values.size() != attributes_.size()) {
    throw std::invalid_argument("profile: expected " + std::to_string(attributes_.size()) +
                                " attribute values, got " + std::to_string(values.size()));
  }
  Profile p;
  for (std::size_t i = 0; i < values.size(); ++i) p[attributes_[i].key] = values[i];
  encode_profile(p, *this);  // validates
  return p;
}

std::vector<std::string> ProfileSchema::to_values(const Profile& profile) const {
  std::vector<std::string> out;
  for (const Attribute& a : attributes_) {
    auto it = profile.find(a.key);
    if (it == profile.end()) throw std::invalid_argument("profile: missing key " + a.key);
    out.push_back(it->second);
  }
  return out;
}

std::string ProfileSchema::label(const Profile& profile) const {
  std::string out;
  for (const std::string& v : to_values(profile)) {
    if (!out.empty()) out += ' ';
    out += v;
  }
  return out;
}

std::vector<Profile> ProfileSchema::all_profiles() const {
  std::vector<Profile> out{Profile{}};
  for (const Attribute& a : attributes_) {
    std::vector<Profile> next;
    for (const Profile& base : out) {
      for (const std::string& v : a.values) {
        Profile p = base;
        p[a.key] = v;
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  if (attributes_.empty()) return {};
  return out;
}

std::string ProfileSchema::serialize() const {
  std::string out;
  for (const Attribute& a : attributes_) {
    out += a.key;
    for (const std::string& v : a.values) out += " " + v;
    out += '\n';
  }
  return out;
}

ProfileSchema ProfileSchema::deserialize(std::string_view text) {
  std::vector<Attribute> attributes;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fields = split_ws(lines[i]);
    if (fields.empty()) continue;
    if (fields.size() < 2) throw ParseError(i + 1, "schema: attribute without values");
    Attribute a{fields[0], std::vector<std::string>(fields.begin() + 1, fields.end())};
    attributes.push_back(std::move(a));
  }
  try {
    return ProfileSchema(std::move(attributes));
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
}

std::uint64_t ProfileSchema::fingerprint() const { return fnv1a(serialize()); }

Vector encode_profile(const Profile& profile, const ProfileSchema& schema) {
  Vector out(schema.onehot_dim(), 0.0);
  std::size_t offset = 0;
  for (const auto& attr : schema.attributes()) {
    auto it = profile.find(attr.key);
    if (it == profile.end()) {
      throw std::invalid_argument("profile is missing attribute `" + attr.key + "`");
    }
    auto pos = std::find(attr.values.begin(), attr.values.end(), it->second);
    if (pos == attr.values.end()) {
      throw std::invalid_argument("unknown value `" + it->second + "` for attribute `" +
                                  attr.key + "`");
    }
    out[offset + static_cast<std::size_t>(pos - attr.values.begin())] = 1.0;
    offset += attr.values.size();
  }
  return out;
}

}  // namespace pmemn2n
