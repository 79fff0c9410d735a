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

#include "pmemn2n/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pmemn2n {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

std::vector<std::span<const double>> row_views(const std::vector<Vector>& rows) {
  std::vector<std::span<const double>> out;
  out.reserve(rows.size());
  for (const Vector& r : rows) out.emplace_back(r);
  return out;
}

// Gradient of one hop. `upstream` is dL/d(q_out) where
// q_out = q_in + transform * read (+ p, handled by the caller).
// Returns dL/d(q_in) through the attention path and accumulates slot and
// transform gradients.
Vector hop_backward(const ForwardTrace::HopState& state,
                    std::span<const std::span<const double>> slots, const Matrix& transform,
                    std::span<const double> upstream, Matrix& transform_grad,
                    std::vector<Vector>& slot_grads) {
  Vector dq(upstream.begin(), upstream.end());
  if (state.attention.empty()) return dq;

  add_outer(transform_grad, upstream, state.read);
  const Vector dread = matvec_transposed(transform, upstream);

  const std::size_t n = slots.size();
  Vector dalpha(n);
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dalpha[i] = dot(dread, slots[i]);
    weighted += state.attention[i] * dalpha[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double a = state.attention[i];
    const double dscore = a * (dalpha[i] - weighted);
    axpy(a, dread, slot_grads[i]);
    axpy(dscore, state.query, slot_grads[i]);
    axpy(dscore, slots[i], dq);
  }
  return dq;
}

}  // namespace

void ModelConfig::validate() const {
  require(embedding_dim >= 1, "model config: embedding_dim must be >= 1");
  require(hops >= 1, "model config: hops must be >= 1");
  require(context_cap >= 1 && global_cap >= 1, "model config: memory caps must be >= 1");
}

std::string ModelConfig::components() const {
  std::string out;
  auto append = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  append(use_profile_embedding, "profile");
  append(use_global_memory, "global");
  append(use_preference, "preference");
  return out.empty() ? "none" : out;
}

ModelParameters ModelParameters::zeros(const ModelShapes& s) {
  ModelParameters p;
  p.A = Matrix(s.embedding_dim, s.feature_dim);
  p.W = Matrix(s.embedding_dim, s.feature_dim);
  p.R = Matrix(s.embedding_dim, s.embedding_dim);
  p.Rg = Matrix(s.embedding_dim, s.embedding_dim);
  p.P = Matrix(s.embedding_dim, s.profile_dim);
  p.E = Matrix(s.kb_columns, s.profile_dim);
  return p;
}

ModelParameters ModelParameters::xavier(const ModelShapes& s, Rng& rng) {
  ModelParameters p = zeros(s);
  for (Matrix* m : p.all()) {
    if (m->size() == 0) continue;
    *m = xavier_init(m->rows(), m->cols(), rng);
  }
  // E feeds a ReLU with only K outputs; a signed start leaves whole profile
  // groups with no gradient, so its draws are folded to be non-negative.
  for (double& x : p.E.data()) x = std::abs(x);
  return p;
}

ModelShapes ModelParameters::shapes() const {
  return {A.rows(), A.cols(), P.cols(), E.rows()};
}

void ModelParameters::set_zero() {
  for (Matrix* m : all()) m->fill(0.0);
}

bool ModelParameters::finite() const {
  for (const Matrix* m : all()) {
    if (!all_finite(m->data())) return false;
  }
  return true;
}

std::optional<std::size_t> CandidateSet::find(std::string_view text) const {
  auto it = std::find(texts.begin(), texts.end(), text);
  if (it == texts.end()) return std::nullopt;
  return static_cast<std::size_t>(it - texts.begin());
}

CandidateSet build_candidate_set(std::vector<std::string> texts, const Vocabulary& vocab,
                                 const KnowledgeBase* kb) {
  CandidateSet set;
  set.texts = std::move(texts);
  set.bags.reserve(set.texts.size());
  set.entities.reserve(set.texts.size());
  for (const std::string& t : set.texts) {
    set.bags.push_back(encode_candidate(t, vocab));
    set.entities.push_back(kb ? candidate_entity(t, *kb) : std::nullopt);
  }
  return set;
}

EmbeddingCache EmbeddingCache::build(const ModelParameters& params, const SharedInputs& shared) {
  const std::size_t d = params.A.rows();
  EmbeddingCache cache;
  const std::size_t c = shared.candidates ? shared.candidates->size() : 0;
  cache.candidates = Matrix(c, d);
  for (std::size_t i = 0; i < c; ++i) {
    embed_bag_into(shared.candidates->bags[i], params.W, cache.candidates.row(i));
  }
  const std::size_t g = shared.pool ? shared.pool->slots.size() : 0;
  cache.pool = Matrix(g, d);
  for (std::size_t i = 0; i < g; ++i) {
    embed_bag_into(shared.pool->slots[i], params.A, cache.pool.row(i));
  }
  return cache;
}

HopResult hop(std::span<const double> query, std::span<const std::span<const double>> slots,
              const Matrix& transform, std::size_t valid_count) {
  require(valid_count >= 1, "hop: no valid memory slots");
  require(valid_count <= slots.size(), "hop: valid_count exceeds slot count");
  require(transform.rows() == query.size() && transform.cols() == query.size(),
          "hop: transform must be d x d");
  Vector scores(valid_count);
  for (std::size_t i = 0; i < valid_count; ++i) scores[i] = dot(query, slots[i]);
  Vector weights = softmax(scores);

  HopResult result;
  result.attention.assign(slots.size(), 0.0);
  result.read.assign(query.size(), 0.0);
  for (std::size_t i = 0; i < valid_count; ++i) {
    result.attention[i] = weights[i];
    axpy(weights[i], slots[i], result.read);
  }
  result.output = matvec(transform, result.read);
  return result;
}

ForwardTrace forward(const DialogInstance& instance, const ModelParameters& params,
                     const ModelConfig& config, const SharedInputs& shared,
                     const EmbeddingCache& cache) {
  require(shared.candidates != nullptr && shared.candidates->size() > 0,
          "forward: empty candidate set");
  const std::size_t d = params.A.rows();
  const std::size_t c = shared.candidates->size();
  require(cache.candidates.rows() == c && cache.candidates.cols() == d,
          "forward: stale candidate embedding cache");

  ForwardTrace t;
  t.query0 = embed_bag(instance.query, params.A);

  t.profile_embedding.assign(d, 0.0);
  if (config.use_profile_embedding) {
    require(instance.profile.size() == params.P.cols(), "forward: profile length mismatch");
    t.profile_embedding = matvec(params.P, instance.profile);
  }

  // Context memory chain. The memory keeps at most context_cap slots.
  t.context_slots.reserve(instance.context.size());
  for (const BagOfWords& bag : instance.context) t.context_slots.push_back(embed_bag(bag, params.A));
  const auto context_views = row_views(t.context_slots);

  Vector q = t.query0;
  for (std::size_t k = 0; k < config.hops; ++k) {
    ForwardTrace::HopState state{q, {}, {}};
    Vector next = q;
    if (config.use_profile_embedding) axpy(1.0, t.profile_embedding, next);
    if (!context_views.empty()) {
      HopResult h = hop(q, context_views, params.R, context_views.size());
      axpy(1.0, h.output, next);
      state.attention = std::move(h.attention);
      state.read = std::move(h.read);
    }
    t.context_hops.push_back(std::move(state));
    q = std::move(next);
  }
  t.query_final = q;

  // Global memory chain starts from the raw query and never sees p.
  t.query_plus = t.query_final;
  if (config.use_global_memory) {
    std::vector<std::span<const double>> pool_views;
    pool_views.reserve(instance.global_memory.size());
    for (std::uint32_t idx : instance.global_memory) {
      require(idx < cache.pool.rows(), "forward: global memory index out of range");
      pool_views.push_back(cache.pool.row(idx));
    }
    Vector qg = t.query0;
    for (std::size_t k = 0; k < config.hops; ++k) {
      ForwardTrace::HopState state{qg, {}, {}};
      Vector next = qg;
      if (!pool_views.empty()) {
        HopResult h = hop(qg, pool_views, params.Rg, pool_views.size());
        axpy(1.0, h.output, next);
        state.attention = std::move(h.attention);
        state.read = std::move(h.read);
      }
      t.global_hops.push_back(std::move(state));
      qg = std::move(next);
    }
    t.global_final = qg;
    axpy(1.0, t.global_final, t.query_plus);
  }

  const std::size_t kcols = params.E.rows();
  t.preference_raw.assign(kcols, 0.0);
  t.preference.assign(kcols, 0.0);
  t.bias.assign(c, 0.0);
  if (config.use_preference) {
    require(instance.profile.size() == params.E.cols(), "forward: profile length mismatch");
    t.preference_raw = matvec(params.E, instance.profile);
    t.preference = relu(t.preference_raw);
    t.bias = bias_vector(t.preference, shared.candidates->entities, instance.mentioned_items);
  }

  t.tendency.assign(c, 1.0);
  t.raw_scores.resize(c);
  t.logits.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    const auto r = cache.candidates.row(i);
    if (config.use_profile_embedding) t.tendency[i] = sigmoid(dot(t.profile_embedding, r));
    t.raw_scores[i] = dot(t.query_plus, r);
    t.logits[i] = t.tendency[i] * t.raw_scores[i] + t.bias[i];
  }
  t.probabilities = softmax(t.logits);
  return t;
}

ForwardTrace forward(const DialogInstance& instance, const ModelParameters& params,
                     const ModelConfig& config, const SharedInputs& shared) {
  return forward(instance, params, config, shared, EmbeddingCache::build(params, shared));
}

std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), "argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t predict(const ForwardTrace& trace) { return argmax(trace.probabilities); }

double loss(const ForwardTrace& trace, std::size_t true_index) {
  require(true_index < trace.logits.size(), "loss: true index out of range");
  return log_sum_exp(trace.logits) - trace.logits[true_index];
}

Vector tendency_weights(std::span<const double> profile_embedding,
                        const Matrix& candidate_embeddings) {
  Vector out(candidate_embeddings.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = sigmoid(dot(profile_embedding, candidate_embeddings.row(i)));
  }
  return out;
}

GradientAccumulator::GradientAccumulator(const ModelShapes& shapes, const SharedInputs& shared)
    : grads_(ModelParameters::zeros(shapes)),
      candidate_rows_(shared.candidates ? shared.candidates->size() : 0, shapes.embedding_dim),
      pool_rows_(shared.pool ? shared.pool->slots.size() : 0, shapes.embedding_dim) {}

void GradientAccumulator::reset() {
  grads_.set_zero();
  candidate_rows_.fill(0.0);
  pool_rows_.fill(0.0);
}

void GradientAccumulator::finalize(const SharedInputs& shared) {
  for (std::size_t i = 0; i < candidate_rows_.rows(); ++i) {
    accumulate_bag_gradient(shared.candidates->bags[i], candidate_rows_.row(i), grads_.W);
  }
  for (std::size_t i = 0; i < pool_rows_.rows(); ++i) {
    accumulate_bag_gradient(shared.pool->slots[i], pool_rows_.row(i), grads_.A);
  }
  candidate_rows_.fill(0.0);
  pool_rows_.fill(0.0);
}

double backward(const ForwardTrace& t, const DialogInstance& instance,
                const ModelParameters& params, const ModelConfig& config,
                const SharedInputs& shared, const EmbeddingCache& cache,
                GradientAccumulator& acc, double scale) {
  require(instance.true_index < t.logits.size(), "backward: true index out of range");
  const std::size_t d = params.A.rows();
  const std::size_t c = t.logits.size();
  ModelParameters& g = acc.grads();
  const double value = loss(t, instance.true_index);

  // dL/dlogits = r-hat - onehot(true)
  Vector dlogits(c);
  for (std::size_t i = 0; i < c; ++i) {
    dlogits[i] = scale * (t.probabilities[i] - (i == instance.true_index ? 1.0 : 0.0));
  }

  // Candidate side: logit_i = s_i * raw_i + b_i, raw_i = q+ . r_i,
  // s_i = sigma(p . r_i).
  Vector dq_plus(d, 0.0);
  Vector dp(d, 0.0);
  Vector dpref(params.E.rows(), 0.0);
  Matrix& dcand = acc.candidate_rows();
  for (std::size_t i = 0; i < c; ++i) {
    if (dlogits[i] == 0.0) continue;
    const auto r = cache.candidates.row(i);
    const double s = t.tendency[i];
    axpy(dlogits[i] * s, r, dq_plus);
    axpy(dlogits[i] * s, t.query_plus, dcand.row(i));
    if (config.use_profile_embedding) {
      const double dpre = dlogits[i] * t.raw_scores[i] * s * (1.0 - s);
      axpy(dpre, t.profile_embedding, dcand.row(i));
      axpy(dpre, r, dp);
    }
  }

  if (config.use_preference) {
    const auto& entities = shared.candidates->entities;
    for (std::size_t i = 0; i < c; ++i) {
      const auto& ref = entities[i];
      if (!ref) continue;
      if (std::binary_search(instance.mentioned_items.begin(), instance.mentioned_items.end(),
                             ref->item)) {
        dpref[ref->column] += dlogits[i];
      }
    }
    for (std::size_t j = 0; j < dpref.size(); ++j) {
      if (t.preference_raw[j] <= 0.0) dpref[j] = 0.0;
    }
    add_outer(g.E, dpref, instance.profile);
  }

  // Context chain, newest hop first.
  const auto context_views = row_views(t.context_slots);
  std::vector<Vector> context_grads(t.context_slots.size(), Vector(d, 0.0));
  Vector dq = dq_plus;
  for (std::size_t k = config.hops; k-- > 0;) {
    if (config.use_profile_embedding) axpy(1.0, dq, dp);
    dq = hop_backward(t.context_hops[k], context_views, params.R, dq, g.R, context_grads);
  }
  Vector dquery0 = std::move(dq);

  if (config.use_global_memory) {
    std::vector<std::span<const double>> pool_views;
    pool_views.reserve(instance.global_memory.size());
    for (std::uint32_t idx : instance.global_memory) pool_views.push_back(cache.pool.row(idx));
    std::vector<Vector> pool_grads(pool_views.size(), Vector(d, 0.0));
    Vector dqg = dq_plus;
    for (std::size_t k = config.hops; k-- > 0;) {
      dqg = hop_backward(t.global_hops[k], pool_views, params.Rg, dqg, g.Rg, pool_grads);
    }
    axpy(1.0, dqg, dquery0);
    for (std::size_t i = 0; i < pool_grads.size(); ++i) {
      axpy(1.0, pool_grads[i], acc.pool_rows().row(instance.global_memory[i]));
    }
  }

  accumulate_bag_gradient(instance.query, dquery0, g.A);
  for (std::size_t i = 0; i < context_grads.size(); ++i) {
    accumulate_bag_gradient(instance.context[i], context_grads[i], g.A);
  }
  if (config.use_profile_embedding) add_outer(g.P, dp, instance.profile);
  return value;
}

std::pair<double, ModelParameters> compute_gradients(const DialogInstance& instance,
                                                     const ModelParameters& params,
                                                     const ModelConfig& config,
                                                     const SharedInputs& shared) {
  const EmbeddingCache cache = EmbeddingCache::build(params, shared);
  const ForwardTrace trace = forward(instance, params, config, shared, cache);
  GradientAccumulator acc(params.shapes(), shared);
  const double value = backward(trace, instance, params, config, shared, cache, acc);
  acc.finalize(shared);
  return {value, acc.grads()};
}

}  // namespace pmemn2n
