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

#include "pmemn2n/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmemn2n/checkpoint.hpp"
#include "pmemn2n/errors.hpp"
#include "pmemn2n/eval.hpp"
#include "pmemn2n/synthetic.hpp"

namespace pmemn2n {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for bad user input discovered after flag parsing (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

fs::path sibling(const fs::path& base, const std::string& suffix) {
  return fs::path(base.string() + suffix);
}

// ---------------------------------------------------------------- flags

struct ModelFlags {
  std::size_t dim = 128;
  std::size_t hops = 3;
  std::size_t context_cap = 250;
  std::size_t global_cap = 1000;
  std::size_t time_features = kDefaultTimeFeatures;
  std::vector<std::string> disable;
  std::string global_source = "similar";
  std::string global_content = "both";
  std::uint64_t global_seed = 17;
  bool profile_as_utterance = false;
  std::string mention_rule = "item_name";

  void add(CLI::App& app) {
    app.add_option("--dim,--embedding-dim", dim, "Embedding dimension d")->capture_default_str();
    app.add_option("--hops", hops, "Memory hops N")->capture_default_str();
    app.add_option("--context-cap", context_cap, "Context memory slots")->capture_default_str();
    app.add_option("--global-cap", global_cap, "Global memory slots")->capture_default_str();
    app.add_option("--time-features", time_features, "Number of time features T")
        ->capture_default_str();
    app.add_option("--disable", disable, "Components to switch off")
        ->delimiter(',')
        ->check(CLI::IsMember({"profile", "global", "preference"}));
    app.add_option("--global-source", global_source, "Global memory users")
        ->check(CLI::IsMember({"similar", "random"}))
        ->capture_default_str();
    app.add_option("--global-content", global_content, "Utterances pooled in global memory")
        ->check(CLI::IsMember({"both", "user", "bot"}))
        ->capture_default_str();
    app.add_option("--global-seed", global_seed, "Global memory sampling seed")
        ->capture_default_str();
    app.add_flag("--profile-as-utterance", profile_as_utterance,
                 "Prepend the profile to the memory as a user utterance");
    app.add_option("--mention-rule", mention_rule, "When a KB item counts as mentioned")
        ->check(CLI::IsMember({"item_name", "any_entity_of_item"}))
        ->capture_default_str();
  }

  ModelConfig model() const {
    ModelConfig m;
    m.embedding_dim = dim;
    m.hops = hops;
    m.context_cap = context_cap;
    m.global_cap = global_cap;
    auto off = [&](const char* name) {
      return std::find(disable.begin(), disable.end(), name) != disable.end();
    };
    m.use_profile_embedding = !off("profile");
    m.use_global_memory = !off("global");
    m.use_preference = !off("preference");
    m.validate();
    return m;
  }

  DatasetOptions options() const {
    DatasetOptions o;
    o.time_features = time_features;
    o.context_cap = context_cap;
    o.global_cap = global_cap;
    o.global_source = parse_global_source(global_source);
    o.global_content = parse_global_content(global_content);
    o.global_seed = global_seed;
    o.profile_as_utterance = profile_as_utterance;
    o.mention_rule = parse_mention_rule(mention_rule);
    o.build_global_memory = model().use_global_memory;
    return o;
  }
};

struct TrainFlags {
  TrainConfig config;

  void add(CLI::App& app) {
    app.add_option("--lr,--learning-rate", config.learning_rate, "Learning rate")
        ->capture_default_str();
    app.add_option("--momentum", config.momentum, "Nesterov momentum")->capture_default_str();
    app.add_option("--clip,--clip-threshold", config.clip_threshold, "Global-norm clip")
        ->capture_default_str();
    app.add_option("--batch-size", config.batch_size, "Mini-batch size")->capture_default_str();
    app.add_option("--max-epochs", config.max_epochs, "Epoch limit")->capture_default_str();
    app.add_option("--patience", config.patience, "Early-stopping patience")
        ->capture_default_str();
    app.add_option("--seed", config.seed, "Initialisation and shuffling seed")
        ->capture_default_str();
  }
};

std::vector<std::string> kb_columns_of(const KnowledgeBase& kb) { return kb.columns(); }

std::string percent(double accuracy) { return fmt::format("{:.2f}", 100.0 * accuracy); }

// Rebuilds the dataset a checkpoint expects from a corpus directory and
// checks that it matches.
Dataset dataset_for(const Checkpoint& ckpt, const Corpus& corpus) {
  DatasetOptions opts = ckpt.data;
  opts.build_global_memory = ckpt.model.use_global_memory;
  Dataset ds = build_dataset(corpus, opts);
  ckpt.check_compatible(ds, corpus);
  return ds;
}

// CLI11 only reads the config file of the top-level app, so subcommand
// config files are applied here. Flags given on the command line win.
void apply_config_file(CLI::App& sub) {
  CLI::Option* cfg = sub.get_config_ptr();
  if (cfg == nullptr || cfg->count() == 0) return;
  const std::string path = cfg->as<std::string>();
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = sub.get_config_formatter_base()->from_file(path);
  } catch (const CLI::Error& e) {
    throw UsageError("cannot read config file " + path + ": " + e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string key = item.fullname();
    CLI::Option* op = sub.get_option_no_throw("--" + key);
    if (op == nullptr || op == cfg) throw UsageError("unknown key `" + key + "` in " + path);
    if (op->count() > 0) continue;
    op->add_result(item.inputs);
    try {
      op->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key `" + key + "`: " + e.what());
    }
  }
}

// ------------------------------------------------------------- commands

int cmd_generate(const fs::path& config_path, const fs::path& out_dir, std::ostream& out) {
  const SyntheticConfig config = SyntheticConfig::from_json(read_text(config_path));
  const SyntheticCorpus synthetic = generate_synthetic(config);
  fs::create_directories(out_dir);
  save_synthetic(synthetic, config, out_dir);
  const Corpus& c = synthetic.corpus;
  out << fmt::format("# generate-data seed={} tasks={} corpus={:016x}\n", config.seed,
                     fmt::join(config.tasks, ","), c.fingerprint());
  out << fmt::format("wrote {} train / {} dev / {} test dialogs, {} candidates, {} KB items to {}\n",
                     c.train.size(), c.dev.size(), c.test.size(), c.candidates.size(),
                     c.kb.item_count(), out_dir.string());
  return kExitOk;
}

struct TrainArgs {
  fs::path corpus;
  fs::path checkpoint;
  fs::path report;
  fs::path resume;
  bool quiet = false;
};

int cmd_train(const TrainArgs& args, const ModelFlags& mf, const TrainFlags& tf,
              const std::vector<std::string>& explicit_model_flags, std::ostream& out) {
  const Corpus corpus = load_corpus(args.corpus);
  ModelConfig model = mf.model();
  DatasetOptions options = mf.options();
  std::optional<TrainState> resume;
  if (!args.resume.empty()) {
    Checkpoint ckpt = Checkpoint::load(args.resume);
    if (!explicit_model_flags.empty()) {
      ModelConfig wanted = model;
      if (wanted.embedding_dim != ckpt.model.embedding_dim ||
          wanted.hops != ckpt.model.hops) {
        throw UsageError(fmt::format(
            "shape mismatch: checkpoint has dim={} hops={}, flags ask for dim={} hops={}",
            ckpt.model.embedding_dim, ckpt.model.hops, wanted.embedding_dim, wanted.hops));
      }
    }
    model = ckpt.model;
    options = ckpt.data;
    options.build_global_memory = model.use_global_memory;
    resume = std::move(ckpt.state);
  }
  const Dataset ds = build_dataset(corpus, options);
  const ModelShapes shapes = dataset_shapes(ds, corpus.schema, corpus.kb, model.embedding_dim);
  if (resume && resume->params.shapes() != shapes) {
    throw DataError("shape mismatch: checkpoint parameters do not fit this corpus");
  }
  out << fmt::format(
      "# train seed={} components={} dim={} hops={} lr={} batch={} corpus={:016x}\n",
      tf.config.seed, model.components(), model.embedding_dim, model.hops,
      tf.config.learning_rate, tf.config.batch_size, corpus.fingerprint());
  out << fmt::format("instances: {} train / {} dev; vocabulary {} words; {} candidates\n",
                     ds.train.size(), ds.dev.size(), ds.vocab.base_size(), ds.candidates.size());

  TrainReport report;
  const TrainState state = train(
      ds.train, ds.dev, ds.shared(), shapes, model, tf.config, report, std::move(resume),
      [&](const EpochRecord& e, const TrainState&) {
        if (!args.quiet) {
          out << fmt::format("epoch {:4d}  loss {:.4f}  dev {}\n", e.epoch, e.train_loss,
                             percent(e.dev_accuracy));
          out.flush();
        }
      });
  const Checkpoint ckpt = Checkpoint::capture(model, tf.config, ds, corpus, state);
  ckpt.save(args.checkpoint);
  const fs::path report_path =
      args.report.empty() ? sibling(args.checkpoint, ".report.csv") : args.report;
  write_text(report_path, report.to_csv());
  write_text(sibling(args.checkpoint, ".manifest.json"),
             manifest_json("train", corpus, model, options, tf.config));
  out << fmt::format("stopped: {} after epoch {}; best epoch {} (dev {}); {:.1f}s\n",
                     report.stop_reason, state.epoch, report.best_epoch,
                     percent(report.best_dev_accuracy), report.wall_seconds);
  out << fmt::format("checkpoint: {}\nreport: {}\n", args.checkpoint.string(),
                     report_path.string());
  return kExitOk;
}

struct EvalArgs {
  fs::path checkpoint;
  fs::path corpus;
  std::string split = "test";
  bool per_task = false;
  fs::path report;
};

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = Checkpoint::load(args.checkpoint);
  const Corpus corpus = load_corpus(args.corpus);
  const Dataset ds = dataset_for(ckpt, corpus);
  std::span<const DialogInstance> items;
  if (args.split == "train") items = ds.train.items;
  if (args.split == "dev") items = ds.dev.items;
  if (args.split == "test") items = ds.test.items;

  out << fmt::format("# eval split={} components={} corpus={:016x}\n", args.split,
                     ckpt.model.components(), corpus.fingerprint());
  if (items.empty()) err << fmt::format("warning: split `{}` has no instances\n", args.split);
  const double acc = items.empty() ? 0.0
                                   : evaluate(ckpt.state.params, items, ckpt.model, ds.shared());
  json report = {{"split", args.split},
                 {"instances", items.size()},
                 {"accuracy", acc},
                 {"components", ckpt.model.components()}};
  out << fmt::format("accuracy: {}\n", percent(acc));
  if (args.per_task && !items.empty()) {
    json per = json::object();
    for (const auto& [task, a] : accuracy_by_task(ckpt.state.params, items, ckpt.model,
                                                  ds.shared())) {
      out << fmt::format("task{}: {}\n", task, percent(a));
      per[fmt::format("task{}", task)] = a;
    }
    report["per_task"] = per;
  }
  const fs::path path = args.report.empty()
                            ? sibling(args.checkpoint, fmt::format(".eval-{}.json", args.split))
                            : args.report;
  write_text(path, report.dump(2) + "\n");
  return kExitOk;
}

struct AnalyzeArgs {
  std::string which;
  fs::path checkpoint;
  fs::path corpus;
  fs::path out;
  std::vector<int> tasks;
};

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
  const Checkpoint ckpt = Checkpoint::load(args.checkpoint);
  const Corpus corpus = load_corpus(args.corpus);
  out << fmt::format("# analyze {} components={} seed={} corpus={:016x}\n", args.which,
                     ckpt.model.components(), ckpt.train.seed, corpus.fingerprint());
  std::string text;
  std::string ext = ".csv";
  if (args.which == "tendency") {
    const Dataset ds = dataset_for(ckpt, corpus);
    auto groups = load_candidate_groups(args.corpus);
    std::string source = "generator labels";
    if (groups.empty()) {
      groups = infer_candidate_groups(corpus);
      source = "inferred: a candidate joins the profile that produced >= 90% of its training uses";
    }
    const TendencyMatrix m =
        tendency_confusion(ckpt.state.params, corpus.schema, ds.candidates, groups);
    text = m.to_csv();
    out << text;
    out << fmt::format("groups: {}\ndiagonal mean {:.4f}, off-diagonal mean {:.4f}\n", source,
                       m.diagonal_mean, m.off_diagonal_mean);
  } else if (args.which == "preference") {
    const auto rows = preference_scores(ckpt.state.params, ckpt.schema);
    text = preference_csv(rows, kb_columns_of(ckpt.kb));
    out << text;
  } else if (args.which == "global-control") {
    const GlobalControlResult r =
        global_memory_control(corpus, ckpt.model, ckpt.data, ckpt.train);
    json j = {{"similar_accuracy", r.similar_accuracy},
              {"random_accuracy", r.random_accuracy},
              {"similar_best_epoch", r.similar_best_epoch},
              {"random_best_epoch", r.random_best_epoch},
              {"single_profile", r.single_profile}};
    text = j.dump(2) + "\n";
    ext = ".json";
    out << fmt::format("similar users: {}\nrandom users:  {}\n", percent(r.similar_accuracy),
                       percent(r.random_accuracy));
  } else if (args.which == "ablation") {
    const auto cells = ablation_grid(
        corpus, standard_variants(ckpt.model), args.tasks, ckpt.data, ckpt.train,
        [&](const AblationCell& c) {
          out << fmt::format("task{} {:<18} test {}  ({:.1f}s)\n", c.task, c.variant,
                             percent(c.test_accuracy), c.seconds);
          out.flush();
        });
    text = ablation_csv(cells);
    out << text;
  } else {
    throw UsageError("unknown analysis `" + args.which +
                     "` (expected tendency, preference, global-control or ablation)");
  }
  const fs::path path =
      args.out.empty() ? sibling(args.checkpoint, "." + args.which + ext) : args.out;
  write_text(path, text);
  write_text(sibling(path, ".manifest.json"),
             manifest_json("analyze " + args.which, corpus, ckpt.model, ckpt.data, ckpt.train));
  return kExitOk;
}

// ----------------------------------------------------------------- chat

Profile parse_profile_assignments(const std::vector<std::string>& items, Profile base) {
  for (const std::string& item : items) {
    std::stringstream ss(item);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("profile entries look like key=value, got `" + pair + "`");
      }
      base[pair.substr(0, eq)] = pair.substr(eq + 1);
    }
  }
  return base;
}

struct ChatArgs {
  fs::path checkpoint;
  std::vector<std::string> profile;
  fs::path corpus;
  bool debug = false;
};

class ChatSession {
 public:
  ChatSession(Checkpoint ckpt, Profile profile, const fs::path& corpus_dir)
      : ckpt_(std::move(ckpt)), profile_(std::move(profile)) {
    candidates_ = build_candidate_set(ckpt_.candidates, ckpt_.vocab,
                                      ckpt_.kb.item_count() > 0 ? &ckpt_.kb : nullptr);
    if (ckpt_.model.use_global_memory && !corpus_dir.empty()) {
      const Corpus corpus = load_corpus(corpus_dir);
      if (corpus.schema.fingerprint() != ckpt_.schema.fingerprint()) {
        throw DataError("chat: corpus schema differs from the checkpoint");
      }
      index_ = build_global_pool(corpus, ckpt_.vocab, ckpt_.data, pool_);
    }
    encode_profile(profile_, ckpt_.schema);  // validates
    cache_ = EmbeddingCache::build(ckpt_.state.params, {&candidates_, &pool_});
  }

  bool has_global() const { return !pool_.slots.empty(); }
  const Profile& profile() const { return profile_; }

  void set_profile(const Profile& p) {
    encode_profile(p, ckpt_.schema);
    profile_ = p;
  }
  void reset() { history_.clear(); }
  std::size_t memory_size() const { return history_.size(); }

  std::string respond(const std::string& user, std::ostream* debug) {
    DialogInstance inst = encode_instance(history_, user, profile_, ckpt_.schema, ckpt_.kb,
                                          ckpt_.vocab, ckpt_.data);
    if (has_global()) {
      Rng rng(ckpt_.data.global_seed);
      inst.global_memory =
          build_global_memory(index_, ckpt_.schema.label(profile_), -1, ckpt_.data, rng);
    }
    const SharedInputs shared{&candidates_, &pool_};
    const ForwardTrace t = forward(inst, ckpt_.state.params, ckpt_.model, shared, cache_);
    const std::size_t best = predict(t);
    if (debug) print_debug(t, inst, *debug);
    history_.push_back({user, Speaker::kUser});
    history_.push_back({candidates_.texts[best], Speaker::kBot});
    return candidates_.texts[best];
  }

 private:
  void print_debug(const ForwardTrace& t, const DialogInstance& inst, std::ostream& os) const {
    std::vector<std::size_t> order(t.logits.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t k = std::min<std::size_t>(5, order.size());
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](auto a, auto b) {
      return t.logits[a] > t.logits[b] || (t.logits[a] == t.logits[b] && a < b);
    });
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t i = order[r];
      os << fmt::format("  {}. logit {:+.4f}  p {:.4f}  bias {:.4f}  tendency {:.4f}  {}\n",
                        r + 1, t.logits[i], t.probabilities[i], t.bias[i], t.tendency[i],
                        candidates_.texts[i]);
    }
    // Memory texts in window order, matching the slots of the instance.
    std::vector<std::string> texts;
    if (ckpt_.data.profile_as_utterance) texts.push_back(profile_utterance(profile_, ckpt_.schema));
    for (const MemoryEntry& e : history_) texts.push_back(e.text);
    const std::size_t start = texts.size() - inst.context.size();
    for (std::size_t h = 0; h < t.context_hops.size(); ++h) {
      const auto& a = t.context_hops[h].attention;
      if (a.empty()) {
        os << fmt::format("  context hop {}: memory empty\n", h + 1);
        continue;
      }
      const std::size_t j = argmax(a);
      os << fmt::format("  context hop {}: peak {:.3f} on \"{}\"\n", h + 1, a[j],
                        texts[start + j]);
    }
    for (std::size_t h = 0; h < t.global_hops.size(); ++h) {
      const auto& a = t.global_hops[h].attention;
      if (a.empty()) continue;
      const std::size_t j = argmax(a);
      os << fmt::format("  global hop {}: peak {:.3f} on pool slot {}\n", h + 1, a[j],
                        inst.global_memory[j]);
    }
    if (ckpt_.model.use_preference) {
      // Raw v and its L2-normalised form (what `analyze preference` prints).
      const double norm = l2_norm(t.preference);
      std::string prefs;
      std::string normalized;
      for (std::size_t j = 0; j < t.preference.size(); ++j) {
        prefs += fmt::format(" {}={:.4f}", ckpt_.kb.columns()[j], t.preference[j]);
        normalized += fmt::format(" {}={:.6f}", ckpt_.kb.columns()[j],
                                  norm > 0 ? t.preference[j] / norm : 0.0);
      }
      os << "  preference v:" << prefs << "\n";
      os << "  preference normalized:" << normalized << "\n";
    }
  }

  Checkpoint ckpt_;
  Profile profile_;
  CandidateSet candidates_;
  GlobalPool pool_;
  GlobalMemoryIndex index_;
  EmbeddingCache cache_;
  std::vector<MemoryEntry> history_;
};

int cmd_chat(const ChatArgs& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Checkpoint ckpt = Checkpoint::load(args.checkpoint);
  Profile profile;
  try {
    profile = parse_profile_assignments(args.profile, {});
    encode_profile(profile, ckpt.schema);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid profile: ") + e.what());
  }
  const ProfileSchema schema = ckpt.schema;
  ChatSession session(std::move(ckpt), profile, args.corpus);
  err << fmt::format("# chat profile=\"{}\" global={} (:reset, :profile k=v, :quit)\n",
                     schema.label(session.profile()), session.has_global() ? "on" : "off");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == ':') {
      std::istringstream cmd(line);
      std::string name;
      cmd >> name;
      if (name == ":quit" || name == ":q") break;
      if (name == ":reset") {
        session.reset();
        out << "[context cleared]\n";
      } else if (name == ":profile") {
        std::vector<std::string> rest;
        std::string tok;
        while (cmd >> tok) rest.push_back(tok);
        try {
          session.set_profile(parse_profile_assignments(rest, session.profile()));
          out << fmt::format("[profile: {}]\n", schema.label(session.profile()));
        } catch (const std::invalid_argument& e) {
          out << fmt::format("[error: {}]\n", e.what());
        }
      } else {
        out << "[commands: :reset, :profile key=value, :quit]\n";
      }
      out.flush();
      continue;
    }
    out << session.respond(line, args.debug ? &out : nullptr) << "\n";
    out.flush();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Personalized end-to-end memory network for goal-oriented dialog", "pmemn2n"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::string gen_config;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-data", "Write a synthetic personalized corpus");
  gen->add_option("--config", gen_config, "Generator config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory (created if missing)")->required();

  TrainArgs ta;
  ModelFlags mf;
  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->set_config("--config", "", "Config file (TOML/INI) supplying flag defaults");
  tr->add_option("--corpus", ta.corpus, "Corpus directory")->required();
  tr->add_option("--out,--checkpoint", ta.checkpoint, "Checkpoint path to write")->required();
  tr->add_option("--report", ta.report, "TrainReport CSV (default <checkpoint>.report.csv)");
  tr->add_option("--resume", ta.resume, "Continue from this checkpoint");
  tr->add_flag("--quiet", ta.quiet, "No per-epoch lines");
  mf.add(*tr);
  tf.add(*tr);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Per-response accuracy of a checkpoint");
  ev->set_config("--config", "", "Config file (TOML/INI) supplying flag defaults");
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint")->required();
  ev->add_option("--corpus", ea.corpus, "Corpus directory")->required();
  ev->add_option("--split", ea.split, "train, dev or test")
      ->check(CLI::IsMember({"train", "dev", "test"}))
      ->capture_default_str();
  ev->add_flag("--per-task", ea.per_task, "Break accuracy down by task id");
  ev->add_option("--report", ea.report, "JSON report path");

  AnalyzeArgs aa;
  auto* an = app.add_subcommand("analyze", "tendency | preference | global-control | ablation");
  an->set_config("--config", "", "Config file (TOML/INI) supplying flag defaults");
  an->add_option("which", aa.which, "Analysis name")->required();
  an->add_option("--checkpoint", aa.checkpoint, "Checkpoint (its configs drive retraining)")
      ->required();
  an->add_option("--corpus", aa.corpus, "Corpus directory")->required();
  an->add_option("--out", aa.out, "Output file");
  an->add_option("--tasks", aa.tasks, "Tasks for the ablation grid (default: all)")
      ->delimiter(',');

  ChatArgs ca;
  auto* ch = app.add_subcommand("chat", "Interactive REPL");
  ch->add_option("--checkpoint", ca.checkpoint, "Checkpoint")->required();
  ch->add_option("--profile", ca.profile, "Profile as key=value (repeatable or comma-separated)");
  ch->add_option("--corpus", ca.corpus, "Corpus whose training dialogs feed global memory");
  ch->add_flag("--debug", ca.debug, "Show top-5 candidates, attention peaks and bias");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (CLI::App* sub : {tr, ev, an}) {
      if (sub->parsed()) apply_config_file(*sub);
    }
    if (gen->parsed()) return cmd_generate(gen_config, gen_out, out);
    if (tr->parsed()) {
      std::vector<std::string> explicit_flags;
      for (const char* name : {"--dim", "--hops"}) {
        if (tr->get_option(name)->count() > 0) explicit_flags.emplace_back(name);
      }
      return cmd_train(ta, mf, tf, explicit_flags, out);
    }
    if (ev->parsed()) return cmd_eval(ea, out, err);
    if (an->parsed()) return cmd_analyze(aa, out);
    if (ch->parsed()) return cmd_chat(ca, in, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace pmemn2n
