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

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pmemn2n/numerics.hpp"

using namespace pmemn2n;

namespace {

Matrix from_rows(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

}  // namespace

TEST_CASE("softmax matches closed-form values") {
  // exp(k) / (e + e^2 + e^3), computed independently at high precision.
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const Vector p = softmax(x);
  CHECK(p[0] == doctest::Approx(0.0900305731703805).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.2447284710547977).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.6652409557748219).epsilon(1e-14));
  CHECK(log_sum_exp(x) - x[2] == doctest::Approx(0.4076059644443803).epsilon(1e-14));
}

TEST_CASE("softmax is shift invariant and survives huge logits") {
  const std::vector<double> x = {0.3, -1.2, 2.5, 0.0};
  std::vector<double> shifted = x;
  for (double& v : shifted) v += 1000.0;
  const Vector a = softmax(x);
  const Vector b = softmax(shifted);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    total += b[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(all_finite(softmax(std::vector<double>{1e308, -1e308})));
  CHECK(std::isfinite(log_sum_exp(std::vector<double>{1e308, 1e308})));
}

TEST_CASE("masked softmax zeroes padding exactly") {
  const std::vector<double> x = {1.0, 50.0, 3.0};
  const Vector p = softmax(x, {true, false, true});
  CHECK(p[1] == 0.0);
  CHECK(p[0] == doctest::Approx(0.11920292202211756).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.8807970779778824).epsilon(1e-14));
  CHECK_THROWS_AS(softmax(x, {false, false, false}), std::invalid_argument);
  CHECK_THROWS_AS(softmax(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("linear algebra helpers agree with hand-computed products") {
  const Matrix m = from_rows(2, 3, {1, 2, 3, 4, 5, 6});
  const std::vector<double> x = {1, -1, 2};
  CHECK(matvec(m, x) == Vector{5, 11});
  CHECK(matvec_transposed(m, std::vector<double>{1, 2}) == Vector{9, 12, 15});
  const Matrix n = from_rows(3, 2, {1, 0, 0, 1, 1, 1});
  CHECK(matmul(m, n) == from_rows(2, 2, {4, 5, 10, 11}));
  CHECK(outer(std::vector<double>{1, 2}, std::vector<double>{3, 4}) ==
        from_rows(2, 2, {3, 4, 6, 8}));
  Matrix acc(2, 2, 1.0);
  add_outer(acc, std::vector<double>{1, 2}, std::vector<double>{3, 4}, 0.5);
  CHECK(acc == from_rows(2, 2, {2.5, 3, 4, 5}));
  CHECK(dot(x, x) == 6.0);
  CHECK(l2_norm(std::vector<double>{3, 4}) == 5.0);
  CHECK(matmul(Matrix::identity(2), m) == m);
  std::vector<double> y = {1, 1, 1};
  axpy(2.0, x, y);
  CHECK(y == std::vector<double>{3, -1, 5});
}

TEST_CASE("sigmoid and relu") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(relu(std::vector<double>{-1, 0, 2}) == Vector{0, 0, 2});
  CHECK_FALSE(all_finite(std::vector<double>{1.0, std::nan("")}));
  CHECK_FALSE(all_finite(std::vector<double>{std::numeric_limits<double>::infinity()}));
}

TEST_CASE("xavier init is seeded and bounded") {
  const Matrix a = xavier_init(6, 10, 42);
  const Matrix b = xavier_init(6, 10, 42);
  const Matrix c = xavier_init(6, 10, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const double bound = std::sqrt(6.0 / 16.0);
  for (double v : a.data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("rng split yields independent reproducible streams") {
  Rng parent(5);
  Rng child = parent.split();
  Rng parent2(5);
  Rng child2 = parent2.split();
  for (int i = 0; i < 10; ++i) CHECK(child.index(1000) == child2.index(1000));
  CHECK(parent.index(1u << 30) == parent2.index(1u << 30));
  for (int i = 0; i < 100; ++i) {
    const double u = parent.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("global-norm clipping rescales jointly") {
  std::vector<Matrix> g = {from_rows(1, 2, {3, 0}), from_rows(1, 1, {4})};
  CHECK(global_norm(g) == 5.0);
  const auto clipped = clip_global_norm(g, 1.0);
  CHECK(clipped[0](0, 0) == doctest::Approx(0.6));
  CHECK(clipped[1](0, 0) == doctest::Approx(0.8));
  CHECK(global_norm(clipped) == doctest::Approx(1.0));
  // Below the threshold nothing changes.
  CHECK(clip_global_norm(g, 5.0) == g);
  CHECK(clip_global_norm(g, 10.0) == g);
}

TEST_CASE("nesterov lookahead trajectory on a quadratic") {
  // loss = theta^2, gradient 2 theta, evaluated at the lookahead point.
  OptimizerState opt;
  opt.learning_rate = 0.1;
  opt.momentum = 0.9;
  Matrix theta(1, 1, 1.0);
  Matrix v(1, 1, 0.0);
  const double expect_theta[] = {0.8, 0.496, 0.17792};
  const double expect_v[] = {2.0, 3.04, 3.1808};
  for (int step = 0; step < 3; ++step) {
    const Matrix look = nesterov_lookahead(theta, v, opt);
    Matrix grad(1, 1, 2.0 * look(0, 0));
    nesterov_update_inplace(theta, v, grad, opt);
    CHECK(theta(0, 0) == doctest::Approx(expect_theta[step]).epsilon(1e-13));
    CHECK(v(0, 0) == doctest::Approx(expect_v[step]).epsilon(1e-13));
  }
}

TEST_CASE("nesterov with zero momentum is plain gradient descent") {
  OptimizerState opt;
  opt.learning_rate = 0.25;
  opt.momentum = 0.0;
  const Matrix theta = from_rows(1, 3, {1, 2, 3});
  const Matrix grad = from_rows(1, 3, {4, -4, 0.5});
  const auto [next, vel] = nesterov_update(theta, Matrix(1, 3), grad, opt);
  CHECK(next == from_rows(1, 3, {0, 3, 2.875}));
  CHECK(vel == grad);
}

TEST_CASE("optimizer settings are validated") {
  OptimizerState opt;
  CHECK_NOTHROW(opt.validate());
  opt.learning_rate = 0.0;
  CHECK_THROWS(opt.validate());
  opt = {};
  opt.momentum = 1.0;
  CHECK_THROWS(opt.validate());
  opt = {};
  opt.clip_threshold = -1.0;
  CHECK_THROWS(opt.validate());
}
