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

#include "pmemn2n/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <utility>

#include <fmt/core.h>

namespace pmemn2n {

namespace {

// Candidate and pool embeddings are only needed for the enabled paths.
SharedInputs effective_inputs(const SharedInputs& shared, const ModelConfig& model) {
  SharedInputs s = shared;
  if (!model.use_global_memory) s.pool = nullptr;
  return s;
}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (epoch + 1));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(momentum >= 0) || momentum >= 1) fail("momentum must be in [0, 1)");
  if (!(clip_threshold > 0)) fail("clip_threshold must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (patience == 0) fail("patience must be at least 1");
}

OptimizerState TrainConfig::optimizer() const {
  return {learning_rate, momentum, clip_threshold};
}

std::string TrainReport::to_csv() const {
  std::string out = "epoch,train_loss,dev_acc\n";
  for (const EpochRecord& e : epochs) {
    out += fmt::format("{},{:.6f},{:.6f}\n", e.epoch, e.train_loss, e.dev_accuracy);
  }
  return out;
}

TrainState TrainState::fresh(const ModelShapes& shapes, std::uint64_t seed) {
  Rng rng(seed);
  return {ModelParameters::xavier(shapes, rng), ModelParameters::zeros(shapes), 0};
}

NonFiniteError::NonFiniteError(std::size_t epoch, std::size_t batch, std::string quantity)
    : std::runtime_error(fmt::format("non-finite {} in epoch {} batch {}", quantity, epoch, batch)),
      epoch_(epoch),
      batch_(batch),
      quantity_(std::move(quantity)) {}

ModelShapes dataset_shapes(const Dataset& dataset, const ProfileSchema& schema,
                           const KnowledgeBase& kb, std::size_t embedding_dim) {
  return {embedding_dim, dataset.vocab.feature_dim(), schema.onehot_dim(), kb.column_count()};
}

double train_step(TrainState& state, std::span<const DialogInstance* const> batch,
                  const ModelConfig& model, const TrainConfig& config,
                  const SharedInputs& shared) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const OptimizerState opt = config.optimizer();
  const SharedInputs inputs = effective_inputs(shared, model);

  ModelParameters ahead = ModelParameters::zeros(state.params.shapes());
  {
    auto dst = ahead.all();
    auto src = state.params.all();
    auto vel = state.velocity.all();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      *dst[k] = nesterov_lookahead(*src[k], *vel[k], opt);
    }
  }
  const EmbeddingCache cache = EmbeddingCache::build(ahead, inputs);
  GradientAccumulator acc(ahead.shapes(), inputs);
  const double w = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const DialogInstance* inst : batch) {
    const ForwardTrace trace = forward(*inst, ahead, model, inputs, cache);
    total += backward(trace, *inst, ahead, model, inputs, cache, acc, w);
  }
  acc.finalize(inputs);
  const double mean_loss = total * w;
  if (!std::isfinite(mean_loss)) throw NonFiniteError(0, 0, "loss");

  ModelParameters& g = acc.grads();
  if (!g.finite()) throw NonFiniteError(0, 0, "gradient");
  double sq = 0.0;
  for (const Matrix* m : g.all()) sq += squared_norm(m->data());
  const double norm = std::sqrt(sq);
  if (norm > opt.clip_threshold) {
    const double f = opt.clip_threshold / norm;
    for (Matrix* m : g.all()) {
      for (double& x : m->data()) x *= f;
    }
  }
  auto params = state.params.all();
  auto vel = state.velocity.all();
  auto grads = g.all();
  for (std::size_t k = 0; k < params.size(); ++k) {
    nesterov_update_inplace(*params[k], *vel[k], *grads[k], opt);
  }
  return mean_loss;
}

TrainState train(const SplitInstances<Split::kTrain>& train_set,
                 const SplitInstances<Split::kDev>& dev_set, const SharedInputs& shared,
                 const ModelShapes& shapes, const ModelConfig& model,
                 const TrainConfig& config, TrainReport& report,
                 std::optional<TrainState> resume, const EpochCallback& on_epoch) {
  model.validate();
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: no training instances");
  if (shapes.embedding_dim != model.embedding_dim) {
    throw std::invalid_argument("train: shapes disagree with model embedding_dim");
  }
  const auto start = std::chrono::steady_clock::now();

  TrainState state = resume ? std::move(*resume) : TrainState::fresh(shapes, config.seed);
  if (state.params.shapes() != shapes || state.velocity.shapes() != shapes) {
    throw std::invalid_argument("train: resumed state has different shapes");
  }

  report = TrainReport{};
  ModelParameters best = state.params;
  double best_acc = -1.0;
  std::size_t best_epoch = state.epoch;
  if (resume) {
    best_acc = evaluate(state.params, dev_set, model, shared);
  }
  std::size_t stale = 0;
  report.stop_reason = "max_epochs";

  std::vector<std::size_t> order(train_set.size());
  std::vector<const DialogInstance*> batch;
  const std::size_t last_epoch = state.epoch + config.max_epochs;
  while (state.epoch < last_epoch) {
    const std::size_t epoch = state.epoch + 1;
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(epoch_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      ++batch_no;
      batch.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) {
        batch.push_back(&train_set.items[order[i]]);
      }
      try {
        loss_sum += train_step(state, batch, model, config, shared) *
                    static_cast<double>(batch.size());
      } catch (const NonFiniteError& e) {
        throw NonFiniteError(epoch, batch_no, e.quantity());
      }
    }
    state.epoch = epoch;

    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()),
                    evaluate(state.params, dev_set, model, shared)};
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, state);

    if (rec.dev_accuracy > best_acc) {
      best_acc = rec.dev_accuracy;
      best_epoch = epoch;
      best = state.params;
      stale = 0;
    } else if (++stale >= config.patience) {
      report.stop_reason = "early_stopping";
      break;
    }
  }

  // Velocities stay at their last value; the restored parameters are the
  // best-dev snapshot.
  state.params = std::move(best);
  report.best_epoch = best_epoch;
  report.best_dev_accuracy = std::max(best_acc, 0.0);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return state;
}

std::vector<std::size_t> predict_all(const ModelParameters& params,
                                     std::span<const DialogInstance> instances,
                                     const ModelConfig& model, const SharedInputs& shared) {
  std::vector<std::size_t> out;
  if (instances.empty()) return out;
  const SharedInputs inputs = effective_inputs(shared, model);
  const EmbeddingCache cache = EmbeddingCache::build(params, inputs);
  out.reserve(instances.size());
  for (const DialogInstance& inst : instances) {
    out.push_back(predict(forward(inst, params, model, inputs, cache)));
  }
  return out;
}

double evaluate(const ModelParameters& params, std::span<const DialogInstance> instances,
                const ModelConfig& model, const SharedInputs& shared) {
  if (instances.empty()) {
    std::cerr << "warning: evaluate called on an empty instance list; accuracy is 0\n";
    return 0.0;
  }
  const auto predictions = predict_all(params, instances, model, shared);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (predictions[i] == instances[i].true_index) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

}  // namespace pmemn2n
