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

#ifndef PMEMN2N_NUMERICS_HPP_
#define PMEMN2N_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace pmemn2n {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double value);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Seedable generator owned by the caller. `split` derives an independent
// child stream so sub-tasks never share state with their parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng split();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Softmax over `logits`, stabilized by max-subtraction. Entries whose mask
// value is false get exactly 0. Throws std::invalid_argument on empty or
// fully-masked input.
Vector softmax(std::span<const double> logits);
Vector softmax(std::span<const double> logits, const std::vector<bool>& valid_mask);

// log(sum(exp(x))) with max-subtraction.
double log_sum_exp(std::span<const double> logits);

Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng);
Matrix xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double l2_norm(std::span<const double> a);

// y = M x
Vector matvec(const Matrix& m, std::span<const double> x);
// y = M^T x
Vector matvec_transposed(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix outer(std::span<const double> a, std::span<const double> b);
// M += scale * a b^T
void add_outer(Matrix& m, std::span<const double> a, std::span<const double> b,
               double scale = 1.0);

// y += scale * x
void axpy(double scale, std::span<const double> x, std::span<double> y);
Vector add(std::span<const double> a, std::span<const double> b);
Vector scale(std::span<const double> a, double factor);

double sigmoid(double x);
Vector sigmoid(std::span<const double> x);
Vector relu(std::span<const double> x);

bool all_finite(std::span<const double> values);

// Learning schedule shared by every parameter.
struct OptimizerState {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double clip_threshold = 10.0;

  void validate() const;
};

// Joint L2 norm across every gradient.
double global_norm(std::span<const Matrix> gradients);

// Rescales all gradients by threshold/norm when their joint norm exceeds
// the threshold. Returns the pre-clip norm.
double clip_global_norm_inplace(std::span<Matrix> gradients, double threshold);
std::vector<Matrix> clip_global_norm(std::vector<Matrix> gradients, double threshold);

// Nesterov momentum, lookahead form:
//
//   lookahead = param - lr * momentum * velocity
//   velocity  <- momentum * velocity + grad(lookahead)
//   param     <- param - lr * velocity
//
// `gradient` must already be evaluated at nesterov_lookahead(param, velocity).
// With momentum 0 the update is exactly param - lr * gradient.
void nesterov_update_inplace(Matrix& param, Matrix& velocity, const Matrix& gradient,
                             const OptimizerState& state);
std::pair<Matrix, Matrix> nesterov_update(const Matrix& param, const Matrix& velocity,
                                          const Matrix& gradient,
                                          const OptimizerState& state);
Matrix nesterov_lookahead(const Matrix& param, const Matrix& velocity,
                          const OptimizerState& state);

}  // namespace pmemn2n

#endif  // PMEMN2N_NUMERICS_HPP_
