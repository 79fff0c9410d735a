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

// Random model fixtures shared by the unit tests and the acceptance runner.

#ifndef PMEMN2N_TESTS_FIXTURES_HPP_
#define PMEMN2N_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pmemn2n/model.hpp"

namespace pmemn2n::testing {

struct FixtureSpec {
  std::size_t vocab = 20;  // V
  std::size_t time_features = 4;
  std::size_t dim = 8;
  std::size_t hops = 2;
  std::size_t candidates = 5;
  std::size_t context_slots = 3;
  std::size_t global_slots = 4;
  std::size_t kb_columns = 3;
  std::size_t profile_dim = 5;  // two attributes: 2 + 3 values
};

struct Fixture {
  ModelConfig config;
  ModelParameters params;
  CandidateSet candidates;
  GlobalPool pool;
  DialogInstance instance;

  SharedInputs shared() const { return {&candidates, &pool}; }
};

inline BagOfWords random_bag(Rng& rng, std::size_t lo, std::size_t hi, std::size_t words) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < words; ++i) ids.push_back(lo + rng.index(hi - lo));
  return BagOfWords::from_ids(ids);
}

// All components on; entries of E are kept away from the ReLU kink so
// finite differences stay on one side of it.
inline Fixture random_fixture(std::uint64_t seed, const FixtureSpec& s = {}) {
  Rng rng(seed);
  Fixture f;
  f.config.embedding_dim = s.dim;
  f.config.hops = s.hops;
  const std::size_t features = s.vocab + s.time_features + 2;
  const ModelShapes shapes{s.dim, features, s.profile_dim, s.kb_columns};
  f.params = ModelParameters::zeros(shapes);
  for (Matrix* m : f.params.all()) {
    for (double& x : m->data()) x = rng.uniform(-0.5, 0.5);
  }

  for (std::size_t i = 0; i < s.candidates; ++i) {
    f.candidates.texts.push_back("c" + std::to_string(i));
    f.candidates.bags.push_back(random_bag(rng, 0, s.vocab, 2 + rng.index(3)));
    if (i < s.kb_columns) {
      f.candidates.entities.push_back(EntityRef{i % 2, i});
    } else {
      f.candidates.entities.push_back(std::nullopt);
    }
  }
  for (std::size_t i = 0; i < s.global_slots; ++i) {
    f.pool.slots.push_back(random_bag(rng, 0, features, 3 + rng.index(3)));
  }

  DialogInstance& inst = f.instance;
  inst.query = random_bag(rng, 0, s.vocab, 3);
  for (std::size_t i = 0; i < s.context_slots; ++i) {
    std::vector<std::size_t> ids = {s.vocab + std::min(i, s.time_features - 1),
                                    s.vocab + s.time_features + (i % 2)};
    for (std::size_t w = 0; w < 3; ++w) ids.push_back(rng.index(s.vocab));
    inst.context.push_back(BagOfWords::from_ids(ids));
  }
  for (std::size_t i = 0; i < s.global_slots; ++i) inst.global_memory.push_back(i);
  inst.profile.assign(s.profile_dim, 0.0);
  inst.profile[rng.index(2)] = 1.0;
  if (s.profile_dim > 2) inst.profile[2 + rng.index(s.profile_dim - 2)] = 1.0;
  inst.mentioned_items = {0};
  inst.true_index = rng.index(s.candidates);

  // Push E a away from zero: at least 0.05 on either side.
  for (std::size_t j = 0; j < f.params.E.rows(); ++j) {
    double pre = 0.0;
    for (std::size_t c = 0; c < f.params.E.cols(); ++c) pre += f.params.E(j, c) * inst.profile[c];
    if (std::abs(pre) < 0.05) {
      for (std::size_t c = 0; c < f.params.E.cols(); ++c) {
        if (inst.profile[c] != 0.0) f.params.E(j, c) += pre >= 0 ? 0.1 : -0.1;
      }
    }
  }
  return f;
}

inline double fixture_loss(const Fixture& f, const ModelParameters& params) {
  return loss(forward(f.instance, params, f.config, f.shared()), f.instance.true_index);
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::string worst;  // "<matrix>(r,c)"
  std::size_t entries = 0;
};

// Central differences over every entry of the six matrices. The relative
// error is |a - n| / max(|a|, |n|, 1e-7); the floor keeps entries whose
// true gradient is zero from dividing noise by noise.
inline GradCheck gradient_check(const Fixture& f, double eps = 1e-5) {
  const auto [value, grads] = compute_gradients(f.instance, f.params, f.config, f.shared());
  (void)value;
  GradCheck out;
  ModelParameters probe = f.params;
  auto probe_all = probe.all();
  auto grad_all = grads.all();
  for (std::size_t k = 0; k < probe_all.size(); ++k) {
    Matrix& m = *probe_all[k];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + eps;
      const double up = fixture_loss(f, probe);
      m.data()[i] = saved - eps;
      const double down = fixture_loss(f, probe);
      m.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grad_all[k]->data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
      const double rel = std::abs(analytic - numeric) / denom;
      ++out.entries;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst = std::string(ModelParameters::kNames[k]) + "(" +
                    std::to_string(i / m.cols()) + "," + std::to_string(i % m.cols()) + ")";
      }
    }
  }
  return out;
}

// Plain end-to-end memory network written out from its textbook form with
// dense bag-of-words vectors: q1 = A phi(query); q_{k+1} = q_k + R sum a_i m_i;
// logits_i = q_{N+1} . W phi(y_i).
inline std::vector<double> plain_memn2n_logits(const DialogInstance& inst, const Matrix& A,
                                               const Matrix& W, const Matrix& R,
                                               const std::vector<BagOfWords>& candidates,
                                               std::size_t hops) {
  const std::size_t d = A.rows();
  const std::size_t features = A.cols();
  auto dense = [&](const BagOfWords& bag) {
    std::vector<double> phi(features, 0.0);
    for (const BagEntry& e : bag.entries) phi[e.id] = e.count;
    return phi;
  };
  auto embed = [&](const Matrix& M, const BagOfWords& bag) {
    const std::vector<double> phi = dense(bag);
    std::vector<double> out(d, 0.0);
    for (std::size_t f = 0; f < features; ++f) {
      if (phi[f] == 0.0) continue;
      for (std::size_t r = 0; r < d; ++r) out[r] += phi[f] * M(r, f);
    }
    return out;
  };
  auto inner = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };

  std::vector<double> q = embed(A, inst.query);
  std::vector<std::vector<double>> memory;
  for (const BagOfWords& bag : inst.context) memory.push_back(embed(A, bag));
  for (std::size_t k = 0; k < hops && !memory.empty(); ++k) {
    std::vector<double> scores;
    for (const auto& m : memory) scores.push_back(inner(q, m));
    const double top = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double& s : scores) {
      s = std::exp(s - top);
      z += s;
    }
    std::vector<double> read(d, 0.0);
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double a = scores[i] / z;
      for (std::size_t r = 0; r < d; ++r) read[r] += a * memory[i][r];
    }
    std::vector<double> next = q;
    for (std::size_t r = 0; r < d; ++r) {
      double o = 0.0;
      for (std::size_t c = 0; c < d; ++c) o += R(r, c) * read[c];
      next[r] = q[r] + o;
    }
    q = next;
  }
  std::vector<double> logits;
  for (const BagOfWords& y : candidates) logits.push_back(inner(q, embed(W, y)));
  return logits;
}

}  // namespace pmemn2n::testing

#endif  // PMEMN2N_TESTS_FIXTURES_HPP_
