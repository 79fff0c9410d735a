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

#include "pmemn2n/eval.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <set>

#include <fmt/core.h>

#include "json.hpp"
#include "pmemn2n/checkpoint.hpp"

namespace pmemn2n {

using nlohmann::json;

std::map<int, double> accuracy_by_task(const ModelParameters& params,
                                       std::span<const DialogInstance> instances,
                                       const ModelConfig& model, const SharedInputs& shared) {
  const auto predictions = predict_all(params, instances, model, shared);
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto& c = counts[instances[i].task_id];
    c.first += predictions[i] == instances[i].true_index;
    ++c.second;
  }
  std::map<int, double> out;
  for (const auto& [task, c] : counts) {
    out[task] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  return out;
}

bool is_ambiguous_turn(const DialogInstance& instance, const CandidateSet& candidates) {
  return candidates.entities.at(instance.true_index).has_value();
}

double ambiguous_accuracy(const ModelParameters& params, std::span<const DialogInstance> instances,
                          const ModelConfig& model, const SharedInputs& shared) {
  std::vector<DialogInstance> subset;
  for (const DialogInstance& inst : instances) {
    if (is_ambiguous_turn(inst, *shared.candidates)) subset.push_back(inst);
  }
  return evaluate(params, std::span<const DialogInstance>(subset), model, shared);
}

Corpus task_subset(const Corpus& corpus, int task_id) {
  Corpus out;
  out.schema = corpus.schema;
  out.kb = corpus.kb;
  out.candidates = corpus.candidates;
  auto copy = [task_id](const std::vector<Dialog>& from, std::vector<Dialog>& to) {
    for (const Dialog& d : from) {
      if (d.task_id == task_id) to.push_back(d);
    }
  };
  copy(corpus.train, out.train);
  copy(corpus.dev, out.dev);
  copy(corpus.test, out.test);
  return out;
}

std::vector<int> corpus_tasks(const Corpus& corpus) {
  std::set<int> tasks;
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    for (const Dialog& d : corpus.split(s)) tasks.insert(d.task_id);
  }
  return {tasks.begin(), tasks.end()};
}

Experiment run_experiment(const Corpus& corpus, const ModelConfig& model,
                          const DatasetOptions& options, const TrainConfig& train_config) {
  Experiment e;
  DatasetOptions opts = options;
  opts.context_cap = model.context_cap;
  opts.global_cap = model.global_cap;
  opts.build_global_memory = opts.build_global_memory && model.use_global_memory;
  e.dataset = build_dataset(corpus, opts);
  const ModelShapes shapes =
      dataset_shapes(e.dataset, corpus.schema, corpus.kb, model.embedding_dim);
  e.state = train(e.dataset.train, e.dataset.dev, e.dataset.shared(), shapes, model,
                  train_config, e.report);
  e.dev_accuracy = evaluate(e.state.params, e.dataset.dev, model, e.dataset.shared());
  e.test_accuracy = evaluate(e.state.params, e.dataset.test, model, e.dataset.shared());
  return e;
}

std::vector<AblationVariant> standard_variants(const ModelConfig& base) {
  auto with = [&](bool profile, bool global, bool preference) {
    ModelConfig m = base;
    m.use_profile_embedding = profile;
    m.use_global_memory = global;
    m.use_preference = preference;
    return m;
  };
  return {{"baseline", with(false, false, false), true},
          {"profile_embedding", with(true, false, false), false},
          {"global_memory", with(false, true, false), false},
          {"profile", with(true, true, false), false},
          {"preference", with(false, false, true), false},
          {"combined", with(true, true, true), false}};
}

std::vector<AblationCell> ablation_grid(const Corpus& corpus,
                                        const std::vector<AblationVariant>& variants,
                                        std::vector<int> tasks, const DatasetOptions& options,
                                        const TrainConfig& train_config,
                                        const AblationProgress& progress) {
  if (tasks.empty()) tasks = corpus_tasks(corpus);
  std::vector<AblationCell> cells;
  for (int task : tasks) {
    const Corpus subset = task_subset(corpus, task);
    for (const AblationVariant& v : variants) {
      const auto start = std::chrono::steady_clock::now();
      DatasetOptions opts = options;
      opts.profile_as_utterance = v.profile_as_utterance;
      const Experiment e = run_experiment(subset, v.model, opts, train_config);
      AblationCell cell{v.name, task, e.test_accuracy, e.dev_accuracy, e.report.best_epoch,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count()};
      if (progress) progress(cell);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
  std::vector<std::string> variants;
  std::set<int> tasks;
  for (const AblationCell& c : cells) {
    if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) {
      variants.push_back(c.variant);
    }
    tasks.insert(c.task);
  }
  std::string out = "model";
  for (int t : tasks) out += fmt::format(",task{}", t);
  out += "\n";
  for (const std::string& v : variants) {
    out += v;
    for (int t : tasks) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](const AblationCell& c) {
        return c.variant == v && c.task == t;
      });
      out += it == cells.end() ? "," : fmt::format(",{:.2f}", 100.0 * it->test_accuracy);
    }
    out += "\n";
  }
  return out;
}

std::string TendencyMatrix::to_csv() const {
  std::string out = "profile";
  for (const std::string& p : profiles) out += "," + p;
  out += "\n";
  for (std::size_t g = 0; g < profiles.size(); ++g) {
    out += profiles[g];
    for (const auto& v : values[g]) out += v ? fmt::format(",{:.6f}", *v) : ",";
    out += "\n";
  }
  return out;
}

TendencyMatrix tendency_confusion(const ModelParameters& params, const ProfileSchema& schema,
                                  const CandidateSet& candidates,
                                  const std::map<std::string, std::string>& groups) {
  TendencyMatrix m;
  const auto profiles = schema.all_profiles();
  for (const Profile& p : profiles) m.profiles.push_back(schema.label(p));
  const std::size_t g = profiles.size();

  std::vector<std::vector<std::size_t>> members(g);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto it = groups.find(candidates.texts[i]);
    if (it == groups.end()) continue;
    auto pos = std::find(m.profiles.begin(), m.profiles.end(), it->second);
    if (pos != m.profiles.end()) members[pos - m.profiles.begin()].push_back(i);
  }
  for (const auto& mem : members) m.group_sizes.push_back(mem.size());

  m.values.assign(g, std::vector<std::optional<double>>(g));
  double diag = 0.0, off = 0.0;
  std::size_t n_diag = 0, n_off = 0;
  for (std::size_t row = 0; row < g; ++row) {
    const Vector p = matvec(params.P, encode_profile(profiles[row], schema));
    for (std::size_t col = 0; col < g; ++col) {
      if (members[col].empty()) continue;
      double sum = 0.0;
      for (std::size_t i : members[col]) {
        sum += sigmoid(dot(p, embed_bag(candidates.bags[i], params.W)));
      }
      const double mean = sum / static_cast<double>(members[col].size());
      m.values[row][col] = mean;
      if (row == col) {
        diag += mean;
        ++n_diag;
      } else {
        off += mean;
        ++n_off;
      }
    }
  }
  m.diagonal_mean = n_diag ? diag / static_cast<double>(n_diag) : 0.0;
  m.off_diagonal_mean = n_off ? off / static_cast<double>(n_off) : 0.0;
  return m;
}

std::map<std::string, std::string> infer_candidate_groups(const Corpus& corpus, double purity,
                                                          std::size_t min_count) {
  std::map<std::string, std::map<std::string, std::size_t>> seen;
  for (const Dialog& d : corpus.train) {
    const std::string label = corpus.schema.label(d.profile);
    for (const DialogEvent& e : d.events) {
      if (const auto* x = std::get_if<Exchange>(&e)) ++seen[x->bot][label];
    }
  }
  std::map<std::string, std::string> out;
  for (const auto& [text, by_label] : seen) {
    std::size_t total = 0, best = 0;
    std::string best_label;
    for (const auto& [label, n] : by_label) {
      total += n;
      if (n > best) {
        best = n;
        best_label = label;
      }
    }
    if (total >= min_count && static_cast<double>(best) >= purity * static_cast<double>(total)) {
      out[text] = best_label;
    }
  }
  return out;
}

std::vector<PreferenceRow> preference_scores(const ModelParameters& params,
                                             const ProfileSchema& schema) {
  std::vector<PreferenceRow> rows;
  for (const Profile& p : schema.all_profiles()) {
    PreferenceRow r;
    r.profile = schema.label(p);
    r.raw = relu(matvec(params.E, encode_profile(p, schema)));
    const double norm = l2_norm(r.raw);
    r.degenerate = norm == 0.0;
    r.scores = r.degenerate ? Vector(r.raw.size(), 0.0) : scale(r.raw, 1.0 / norm);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string preference_csv(const std::vector<PreferenceRow>& rows,
                           const std::vector<std::string>& columns) {
  std::string out = "profile";
  for (const std::string& c : columns) out += "," + c;
  out += ",degenerate\n";
  for (const PreferenceRow& r : rows) {
    out += r.profile;
    for (double s : r.scores) out += fmt::format(",{:.6f}", s);
    out += r.degenerate ? ",1\n" : ",0\n";
  }
  return out;
}

GlobalControlResult global_memory_control(const Corpus& corpus, const ModelConfig& model,
                                          const DatasetOptions& options,
                                          const TrainConfig& train_config) {
  ModelConfig m = model;
  m.use_global_memory = true;
  DatasetOptions similar = options;
  similar.build_global_memory = true;
  similar.global_source = GlobalSource::kSimilarUsers;
  DatasetOptions random = similar;
  random.global_source = GlobalSource::kRandomUsers;

  GlobalControlResult r;
  std::set<std::string> labels;
  for (const Dialog& d : corpus.train) labels.insert(corpus.schema.label(d.profile));
  r.single_profile = labels.size() <= 1;

  const Experiment a = run_experiment(corpus, m, similar, train_config);
  r.similar_accuracy = a.test_accuracy;
  r.similar_best_epoch = a.report.best_epoch;
  const Experiment b = run_experiment(corpus, m, random, train_config);
  r.random_accuracy = b.test_accuracy;
  r.random_best_epoch = b.report.best_epoch;
  return r;
}

std::string manifest_json(const std::string& command, const Corpus& corpus,
                          const ModelConfig& model, const DatasetOptions& options,
                          const TrainConfig& train) {
  const std::string m = to_json(model);
  const std::string d = to_json(options);
  const std::string t = to_json(train);
  json j;
  j["command"] = command;
  j["corpus_fingerprint"] = fmt::format("{:016x}", corpus.fingerprint());
  j["seeds"] = {{"train", train.seed}, {"global_memory", options.global_seed}};
  j["config_hashes"] = {{"model", fmt::format("{:016x}", fnv1a(m))},
                        {"data", fmt::format("{:016x}", fnv1a(d))},
                        {"train", fmt::format("{:016x}", fnv1a(t))}};
  j["model"] = json::parse(m);
  j["data"] = json::parse(d);
  j["train"] = json::parse(t);
  return j.dump(2) + "\n";
}

}  // namespace pmemn2n
