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

#ifndef PMEMN2N_TRAINING_HPP_
#define PMEMN2N_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmemn2n/data.hpp"
#include "pmemn2n/model.hpp"
#include "pmemn2n/numerics.hpp"

namespace pmemn2n {

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double clip_threshold = 10.0;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;

  void validate() const;
  OptimizerState optimizer() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based, continues across resumes
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;
  std::string stop_reason;
  double wall_seconds = 0.0;

  // `epoch,train_loss,dev_acc`, one row per epoch.
  std::string to_csv() const;
};

// Everything needed to continue training: parameters, velocities and the
// number of completed epochs.
struct TrainState {
  ModelParameters params;
  ModelParameters velocity;
  std::size_t epoch = 0;

  static TrainState fresh(const ModelShapes& shapes, std::uint64_t seed);
};

// Raised when a batch produces a non-finite loss or gradient.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t epoch, std::size_t batch, std::string quantity);
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }
  const std::string& quantity() const { return quantity_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
  std::string quantity_;
};

ModelShapes dataset_shapes(const Dataset& dataset, const ProfileSchema& schema,
                           const KnowledgeBase& kb, std::size_t embedding_dim);

// One Nesterov step on `batch`: gradients are the batch mean evaluated at
// the look-ahead point, clipped by their joint norm. Returns the mean loss
// at the look-ahead point. Throws NonFiniteError (epoch/batch 0) on
// non-finite loss.
double train_step(TrainState& state, std::span<const DialogInstance* const> batch,
                  const ModelConfig& model, const TrainConfig& config,
                  const SharedInputs& shared);

using EpochCallback = std::function<void(const EpochRecord&, const TrainState&)>;

// Seeded shuffle per epoch, mini-batch Nesterov steps, dev accuracy after
// every epoch, early stopping on dev accuracy (ties keep the earlier epoch),
// best parameters restored at the end. `resume` continues from a saved
// state; epoch numbering carries on from it.
TrainState train(const SplitInstances<Split::kTrain>& train_set,
                 const SplitInstances<Split::kDev>& dev_set, const SharedInputs& shared,
                 const ModelShapes& shapes, const ModelConfig& model,
                 const TrainConfig& config, TrainReport& report,
                 std::optional<TrainState> resume = std::nullopt,
                 const EpochCallback& on_epoch = {});

// Per-response accuracy. Empty input yields 0 with a warning on stderr.
double evaluate(const ModelParameters& params, std::span<const DialogInstance> instances,
                const ModelConfig& model, const SharedInputs& shared);

template <Split S>
double evaluate(const ModelParameters& params, const SplitInstances<S>& split,
                const ModelConfig& model, const SharedInputs& shared) {
  return evaluate(params, std::span<const DialogInstance>(split.items), model, shared);
}

// predict() for every instance, in order.
std::vector<std::size_t> predict_all(const ModelParameters& params,
                                     std::span<const DialogInstance> instances,
                                     const ModelConfig& model, const SharedInputs& shared);

}  // namespace pmemn2n

#endif  // PMEMN2N_TRAINING_HPP_
