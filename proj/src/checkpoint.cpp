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

#include "pmemn2n/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "json.hpp"
#include "pmemn2n/errors.hpp"

namespace pmemn2n {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "pmemn2n-checkpoint";
constexpr int kVersion = 1;

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto& data = j.at("data");
  if (data.size() != m.size()) throw DataError("checkpoint: matrix data length mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = data[i].get<double>();
  return m;
}

json params_to_json(const ModelParameters& p) {
  json out;
  auto all = p.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    out[std::string(ModelParameters::kNames[k])] = matrix_to_json(*all[k]);
  }
  return out;
}

ModelParameters params_from_json(const json& j) {
  ModelParameters p;
  auto all = p.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    *all[k] = matrix_from_json(j.at(std::string(ModelParameters::kNames[k])));
  }
  return p;
}

std::uint64_t candidates_fingerprint(const std::vector<std::string>& c) {
  return fnv1a(serialize_candidates(c));
}

}  // namespace

std::string_view to_string(GlobalSource source) {
  return source == GlobalSource::kSimilarUsers ? "similar" : "random";
}

std::string_view to_string(GlobalContent content) {
  switch (content) {
    case GlobalContent::kUserOnly: return "user";
    case GlobalContent::kBotOnly: return "bot";
    default: return "both";
  }
}

GlobalSource parse_global_source(std::string_view name) {
  if (name == "similar") return GlobalSource::kSimilarUsers;
  if (name == "random") return GlobalSource::kRandomUsers;
  throw std::invalid_argument("unknown global source `" + std::string(name) +
                              "` (expected similar or random)");
}

GlobalContent parse_global_content(std::string_view name) {
  if (name == "both") return GlobalContent::kBoth;
  if (name == "user") return GlobalContent::kUserOnly;
  if (name == "bot") return GlobalContent::kBotOnly;
  throw std::invalid_argument("unknown global content `" + std::string(name) +
                              "` (expected both, user or bot)");
}

std::string to_json(const ModelConfig& model) {
  json j = {{"embedding_dim", model.embedding_dim},
            {"hops", model.hops},
            {"use_profile_embedding", model.use_profile_embedding},
            {"use_global_memory", model.use_global_memory},
            {"use_preference", model.use_preference},
            {"context_cap", model.context_cap},
            {"global_cap", model.global_cap}};
  return j.dump();
}

std::string to_json(const TrainConfig& train) {
  json j = {{"learning_rate", train.learning_rate}, {"momentum", train.momentum},
            {"clip_threshold", train.clip_threshold}, {"batch_size", train.batch_size},
            {"max_epochs", train.max_epochs},       {"patience", train.patience},
            {"seed", train.seed}};
  return j.dump();
}

std::string to_json(const DatasetOptions& data) {
  json j = {{"time_features", data.time_features},
            {"context_cap", data.context_cap},
            {"global_cap", data.global_cap},
            {"build_global_memory", data.build_global_memory},
            {"global_source", to_string(data.global_source)},
            {"global_content", to_string(data.global_content)},
            {"global_seed", data.global_seed},
            {"profile_as_utterance", data.profile_as_utterance},
            {"mention_rule", to_string(data.mention_rule)}};
  return j.dump();
}

Checkpoint Checkpoint::capture(const ModelConfig& model, const TrainConfig& train,
                               const Dataset& dataset, const Corpus& corpus, TrainState state) {
  Checkpoint c;
  c.model = model;
  c.train = train;
  c.data = dataset.options;
  c.state = std::move(state);
  c.vocab = dataset.vocab;
  c.schema = corpus.schema;
  c.candidates = corpus.candidates;
  c.kb = corpus.kb;
  c.corpus_fingerprint = corpus.fingerprint();
  return c;
}

ModelShapes Checkpoint::shapes() const {
  return {model.embedding_dim, vocab.feature_dim(), schema.onehot_dim(), kb.column_count()};
}

std::string Checkpoint::to_json() const {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["model"] = json::parse(pmemn2n::to_json(model));
  j["train"] = json::parse(pmemn2n::to_json(train));
  j["data"] = json::parse(pmemn2n::to_json(data));
  j["epoch"] = state.epoch;
  j["vocab"] = vocab.serialize();
  j["schema"] = schema.serialize();
  j["candidates"] = candidates;
  j["kb"] = kb.serialize();
  j["fingerprints"] = {{"vocab", hex(vocab.fingerprint())},
                       {"schema", hex(schema.fingerprint())},
                       {"kb", hex(kb.fingerprint())},
                       {"candidates", hex(candidates_fingerprint(candidates))},
                       {"corpus", hex(corpus_fingerprint)}};
  j["params"] = params_to_json(state.params);
  j["velocity"] = params_to_json(state.velocity);
  return j.dump() + "\n";
}

Checkpoint Checkpoint::from_json(std::string_view text) {
  Checkpoint c;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != kFormat) throw DataError("not a pmemn2n checkpoint");
    if (j.at("version").get<int>() != kVersion) {
      throw DataError(fmt::format("unsupported checkpoint version {}", j.at("version").dump()));
    }
    const json& m = j.at("model");
    c.model.embedding_dim = m.at("embedding_dim");
    c.model.hops = m.at("hops");
    c.model.use_profile_embedding = m.at("use_profile_embedding");
    c.model.use_global_memory = m.at("use_global_memory");
    c.model.use_preference = m.at("use_preference");
    c.model.context_cap = m.at("context_cap");
    c.model.global_cap = m.at("global_cap");
    const json& t = j.at("train");
    c.train.learning_rate = t.at("learning_rate");
    c.train.momentum = t.at("momentum");
    c.train.clip_threshold = t.at("clip_threshold");
    c.train.batch_size = t.at("batch_size");
    c.train.max_epochs = t.at("max_epochs");
    c.train.patience = t.at("patience");
    c.train.seed = t.at("seed");
    const json& d = j.at("data");
    c.data.time_features = d.at("time_features");
    c.data.context_cap = d.at("context_cap");
    c.data.global_cap = d.at("global_cap");
    c.data.build_global_memory = d.at("build_global_memory");
    c.data.global_source = parse_global_source(d.at("global_source").get<std::string>());
    c.data.global_content = parse_global_content(d.at("global_content").get<std::string>());
    c.data.global_seed = d.at("global_seed");
    c.data.profile_as_utterance = d.at("profile_as_utterance");
    c.data.mention_rule = parse_mention_rule(d.at("mention_rule").get<std::string>());
    c.state.epoch = j.at("epoch");
    c.vocab = Vocabulary::deserialize(j.at("vocab").get<std::string>());
    c.schema = ProfileSchema::deserialize(j.at("schema").get<std::string>());
    c.candidates = j.at("candidates").get<std::vector<std::string>>();
    const auto facts = parse_kb_facts(j.at("kb").get<std::string>());
    c.kb = load_kb(facts);
    const json& f = j.at("fingerprints");
    auto expect = [&](const char* name, std::uint64_t actual) {
      if (f.at(name).get<std::string>() != hex(actual)) {
        throw DataError(fmt::format("checkpoint: {} fingerprint mismatch (file is corrupt)", name));
      }
    };
    expect("vocab", c.vocab.fingerprint());
    expect("schema", c.schema.fingerprint());
    expect("kb", c.kb.fingerprint());
    expect("candidates", candidates_fingerprint(c.candidates));
    c.corpus_fingerprint = std::stoull(f.at("corpus").get<std::string>(), nullptr, 16);
    c.state.params = params_from_json(j.at("params"));
    c.state.velocity = params_from_json(j.at("velocity"));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  const ModelShapes expected = c.shapes();
  if (c.state.params.shapes() != expected || c.state.velocity.shapes() != expected) {
    throw DataError("checkpoint: parameter shapes disagree with the embedded vocabulary/schema/KB");
  }
  return c;
}

void Checkpoint::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json();
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint Checkpoint::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void Checkpoint::check_compatible(const Dataset& dataset, const Corpus& corpus) const {
  auto fail = [](const char* what) {
    throw DataError(fmt::format("checkpoint/corpus mismatch: {} differs", what));
  };
  if (schema.fingerprint() != corpus.schema.fingerprint()) fail("profile schema");
  if (vocab.fingerprint() != dataset.vocab.fingerprint()) fail("vocabulary");
  if (kb.fingerprint() != corpus.kb.fingerprint()) fail("knowledge base");
  if (candidates_fingerprint(candidates) != candidates_fingerprint(corpus.candidates)) {
    fail("candidate set");
  }
}

}  // namespace pmemn2n
