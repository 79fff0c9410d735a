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

#ifndef PMEMN2N_MODEL_HPP_
#define PMEMN2N_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmemn2n/encoding.hpp"
#include "pmemn2n/kb.hpp"
#include "pmemn2n/numerics.hpp"

namespace pmemn2n {

struct ModelConfig {
  std::size_t embedding_dim = 128;
  std::size_t hops = 3;
  bool use_profile_embedding = true;
  bool use_global_memory = true;
  bool use_preference = true;
  std::size_t context_cap = 250;
  std::size_t global_cap = 1000;

  void validate() const;
  // "profile,global,preference" style list of enabled components ("none"
  // when all are off).
  std::string components() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Matrix dimensions derived from the vocabulary, schema and KB.
struct ModelShapes {
  std::size_t embedding_dim = 0;
  std::size_t feature_dim = 0;  // V + T + 2
  std::size_t profile_dim = 0;  // d^(p)
  std::size_t kb_columns = 0;   // K
  friend bool operator==(const ModelShapes&, const ModelShapes&) = default;
};

// Trainable matrices. Also used as the gradient container.
//   A  : d x F   memory and query embedding
//   W  : d x F   candidate embedding
//   R  : d x d   context hop transform
//   Rg : d x d   global-memory hop transform
//   P  : d x d^(p) profile transform
//   E  : K x d^(p) preference transform
struct ModelParameters {
  Matrix A, W, R, Rg, P, E;

  static constexpr std::array<std::string_view, 6> kNames = {"A", "W", "R", "Rg", "P", "E"};

  static ModelParameters zeros(const ModelShapes& shapes);
  static ModelParameters xavier(const ModelShapes& shapes, Rng& rng);

  ModelShapes shapes() const;
  std::array<Matrix*, 6> all() { return {&A, &W, &R, &Rg, &P, &E}; }
  std::array<const Matrix*, 6> all() const { return {&A, &W, &R, &Rg, &P, &E}; }
  void set_zero();
  bool finite() const;
  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

// The fixed response universe, encoded once.
struct CandidateSet {
  std::vector<std::string> texts;
  std::vector<BagOfWords> bags;
  std::vector<std::optional<EntityRef>> entities;

  std::size_t size() const { return texts.size(); }
  std::optional<std::size_t> find(std::string_view text) const;
};

CandidateSet build_candidate_set(std::vector<std::string> texts, const Vocabulary& vocab,
                                 const KnowledgeBase* kb);

// Encoded utterances that instances reference as their global memory.
struct GlobalPool {
  std::vector<BagOfWords> slots;
};

// One prediction point.
struct DialogInstance {
  std::vector<BagOfWords> context;            // oldest first
  BagOfWords query;
  std::vector<std::uint32_t> global_memory;   // indices into GlobalPool::slots
  std::size_t true_index = 0;
  Vector profile;                             // one-hot, length d^(p)
  std::vector<std::size_t> mentioned_items;   // sorted KB item ids

  int task_id = 0;
  std::size_t dialog_index = 0;
  std::int64_t own_train_dialog = -1;         // excluded from global memory
  std::size_t turn = 0;
  std::string profile_label;
};

// Shared, read-only inputs for every forward pass.
struct SharedInputs {
  const CandidateSet* candidates = nullptr;
  const GlobalPool* pool = nullptr;
};

// Embedded candidates (rows W Phi(y_i)) and pool slots (rows A Phi(u)) for
// one parameter snapshot. Rebuild whenever A or W change.
struct EmbeddingCache {
  Matrix candidates;
  Matrix pool;

  static EmbeddingCache build(const ModelParameters& params, const SharedInputs& shared);
};

struct HopResult {
  Vector attention;  // one weight per slot; padded slots get exactly 0
  Vector read;       // sum_i attention_i * m_i
  Vector output;     // transform * read
};

// One attention hop over `slots`; only the first `valid_count` slots take
// part, the rest are padding. Throws std::invalid_argument when
// valid_count is 0 or exceeds the slot count.
HopResult hop(std::span<const double> query, std::span<const std::span<const double>> slots,
              const Matrix& transform, std::size_t valid_count);

// Intermediate values of one forward pass, kept for backward and analysis.
struct ForwardTrace {
  struct HopState {
    Vector query;      // query entering the hop
    Vector attention;  // empty when the memory is empty
    Vector read;
  };

  Vector query0;                         // A Phi(c_t^u)
  std::vector<Vector> context_slots;     // A Phi(c_i)
  std::vector<HopState> context_hops;
  std::vector<HopState> global_hops;
  Vector query_final;                    // q_{N+1}
  Vector global_final;                   // q^(g) after N hops
  Vector query_plus;                     // q + q^(g) (or q when global is off)
  Vector profile_embedding;              // p
  Vector preference_raw;                 // E a
  Vector preference;                     // v = ReLU(E a)
  Vector bias;                           // b
  Vector tendency;                       // sigma(p . r_i), or 1 when profile is off
  Vector raw_scores;                     // q+ . r_i
  Vector logits;                         // tendency_i * raw_i + b_i
  Vector probabilities;                  // r-hat
};

ForwardTrace forward(const DialogInstance& instance, const ModelParameters& params,
                     const ModelConfig& config, const SharedInputs& shared,
                     const EmbeddingCache& cache);
// Convenience overload that embeds candidates and pool on the fly.
ForwardTrace forward(const DialogInstance& instance, const ModelParameters& params,
                     const ModelConfig& config, const SharedInputs& shared);

// argmax of r-hat; ties go to the lowest index.
std::size_t predict(const ForwardTrace& trace);
std::size_t argmax(std::span<const double> values);

// -log r-hat[true_index] via log-sum-exp of the logits.
double loss(const ForwardTrace& trace, std::size_t true_index);

// sigma(p . r_i) for each candidate row.
Vector tendency_weights(std::span<const double> profile_embedding,
                        const Matrix& candidate_embeddings);

// Batch gradient buffers. Candidate and pool gradients are kept dense per
// row and scattered into W and A by `finalize`.
class GradientAccumulator {
 public:
  GradientAccumulator(const ModelShapes& shapes, const SharedInputs& shared);

  void reset();
  // Folds the candidate/pool row gradients into W and A.
  void finalize(const SharedInputs& shared);
  ModelParameters& grads() { return grads_; }
  const ModelParameters& grads() const { return grads_; }

  Matrix& candidate_rows() { return candidate_rows_; }
  Matrix& pool_rows() { return pool_rows_; }

 private:
  ModelParameters grads_;
  Matrix candidate_rows_;
  Matrix pool_rows_;
};

// Adds scale * d loss / d params for one instance to `acc`. `trace` must
// come from forward() on the same inputs and cache. Returns the instance
// loss (unscaled).
double backward(const ForwardTrace& trace, const DialogInstance& instance,
                const ModelParameters& params, const ModelConfig& config,
                const SharedInputs& shared, const EmbeddingCache& cache,
                GradientAccumulator& acc, double scale = 1.0);

// Loss and full parameter gradients of a single instance.
std::pair<double, ModelParameters> compute_gradients(const DialogInstance& instance,
                                                     const ModelParameters& params,
                                                     const ModelConfig& config,
                                                     const SharedInputs& shared);

}  // namespace pmemn2n

#endif  // PMEMN2N_MODEL_HPP_
