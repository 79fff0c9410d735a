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

#include "pmemn2n/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pmemn2n {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Rng Rng::split() {
  // Mix two draws so that the child seed differs from any value the parent
  // stream hands out directly.
  const std::uint64_t a = engine_();
  const std::uint64_t b = engine_();
  return Rng(a ^ (b * 0x9E3779B97F4A7C15ULL));
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::size_t Rng::index(std::size_t n) {
  require(n > 0, "Rng::index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Vector softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

Vector softmax(std::span<const double> logits, const std::vector<bool>& valid_mask) {
  require(!logits.empty(), "softmax: empty logits");
  require(valid_mask.size() == logits.size(), "softmax: mask length mismatch");
  double peak = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (valid_mask[i]) {
      peak = std::max(peak, logits[i]);
      any = true;
    }
  }
  require(any, "softmax: every entry is masked");
  Vector out(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!valid_mask[i]) continue;
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double log_sum_exp(std::span<const double> logits) {
  require(!logits.empty(), "log_sum_exp: empty logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double x : logits) total += std::exp(x - peak);
  return peak + std::log(total);
}

Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  require(rows >= 1 && cols >= 1, "xavier_init: zero dimension");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-bound, bound);
  return m;
}

Matrix xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  return xavier_init(rows, cols, rng);
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double l2_norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

Vector matvec(const Matrix& m, std::span<const double> x) {
  require(m.cols() == x.size(), "matvec: dimension mismatch");
  Vector y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
  return y;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> x) {
  require(m.rows() == x.size(), "matvec_transposed: dimension mismatch");
  Vector y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(x[r], m.row(r), y);
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(a(i, k), b.row(k), c.row(i));
  }
  return c;
}

Matrix outer(std::span<const double> a, std::span<const double> b) {
  Matrix m(a.size(), b.size());
  add_outer(m, a, b);
  return m;
}

void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b,
               double scale) {
  require(m.rows() == a.size() && m.cols() == b.size(), "add_outer: dimension mismatch");
  for (std::size_t r = 0; r < a.size(); ++r) axpy(scale * a[r], b, m.row(r));
}

void axpy(double scale, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "add: length mismatch");
  Vector out(a.begin(), a.end());
  axpy(1.0, b, out);
  return out;
}

Vector scale(std::span<const double> a, double factor) {
  Vector out(a.begin(), a.end());
  for (double& x : out) x *= factor;
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(std::span<const double> x) {
  Vector out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return sigmoid(v); });
  return out;
}

Vector relu(std::span<const double> x) {
  Vector out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void OptimizerState::validate() const {
  require(learning_rate > 0.0, "optimizer: learning_rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "optimizer: momentum must be in [0, 1)");
  require(clip_threshold > 0.0, "optimizer: clip_threshold must be positive");
}

double global_norm(std::span<const Matrix> gradients) {
  double total = 0.0;
  for (const Matrix& g : gradients) total += squared_norm(g.data());
  return std::sqrt(total);
}

double clip_global_norm_inplace(std::span<Matrix> gradients, double threshold) {
  require(threshold > 0.0, "clip_global_norm: threshold must be positive");
  const double norm = global_norm(gradients);
  if (norm > threshold) {
    const double factor = threshold / norm;
    for (Matrix& g : gradients) {
      for (double& x : g.data()) x *= factor;
    }
  }
  return norm;
}

std::vector<Matrix> clip_global_norm(std::vector<Matrix> gradients, double threshold) {
  clip_global_norm_inplace(gradients, threshold);
  return gradients;
}

void nesterov_update_inplace(Matrix& param, Matrix& velocity, const Matrix& gradient,
                             const OptimizerState& state) {
  require(param.same_shape(velocity) && param.same_shape(gradient),
          "nesterov_update: shape mismatch");
  auto p = param.data();
  auto v = velocity.data();
  auto g = gradient.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = state.momentum * v[i] + g[i];
    p[i] -= state.learning_rate * v[i];
  }
}

std::pair<Matrix, Matrix> nesterov_update(const Matrix& param, const Matrix& velocity,
                                          const Matrix& gradient,
                                          const OptimizerState& state) {
  Matrix p = param;
  Matrix v = velocity;
  nesterov_update_inplace(p, v, gradient, state);
  return {std::move(p), std::move(v)};
}

Matrix nesterov_lookahead(const Matrix& param, const Matrix& velocity,
                          const OptimizerState& state) {
  require(param.same_shape(velocity), "nesterov_lookahead: shape mismatch");
  Matrix out = param;
  axpy(-state.learning_rate * state.momentum, velocity.data(), out.data());
  return out;
}

}  // namespace pmemn2n
