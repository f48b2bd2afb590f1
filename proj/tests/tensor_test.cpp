// Copyright 2026 The dlcmd Authors. All Rights Reserved.
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
// =============================================================================

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dlcmd/rng.hpp"
#include "dlcmd/tensor.hpp"
#include "oracles.hpp"

namespace dlcmd {
namespace {

TEST(Tensor, ZeroInitializedWithVolume) {
  DenseTensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24);
  EXPECT_EQ(t.rank(), 3);
  for (std::int64_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], 0.0f);
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(DenseTensor({3}, {1.0f, 2.0f}), ShapeError);
}

TEST(Tensor, Add) {
  const auto out = add(DenseTensor({2}, {1, 2}), DenseTensor({2}, {3, 4}));
  EXPECT_EQ(out, DenseTensor({2}, {4, 6}));
}

TEST(Tensor, ScaleByZero) { EXPECT_EQ(scale(DenseTensor({2}, {1, 2}), 0.0f), DenseTensor({2}, {0, 0})); }

TEST(Tensor, Axpy) {
  // 0.5 * 2 + 1 = 2
  EXPECT_EQ(axpy(0.5f, DenseTensor({2}, {2, 2}), DenseTensor({2}, {1, 1})), DenseTensor({2}, {2, 2}));
}

TEST(Tensor, Sub) { EXPECT_EQ(sub(DenseTensor({2}, {5, 1}), DenseTensor({2}, {2, 3})), DenseTensor({2}, {3, -2})); }

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(add(DenseTensor({2}), DenseTensor({3})), ShapeError);
  EXPECT_THROW(sub(DenseTensor({2, 1}), DenseTensor({2})), ShapeError);
  EXPECT_THROW(axpy(1.0f, DenseTensor({2}), DenseTensor({1, 2})), ShapeError);
}

TEST(Tensor, NonFiniteResultThrows) {
  const float big = std::numeric_limits<float>::max();
  EXPECT_THROW(add(DenseTensor({1}, {big}), DenseTensor({1}, {big})), NonFiniteError);
  EXPECT_THROW(scale(DenseTensor({1}, {big}), 4.0f), NonFiniteError);
}

TEST(Tensor, ElementwiseIsDeterministic) {
  std::mt19937_64 gen(3);
  const auto a = oracle::random_tensor(gen, {257});
  const auto b = oracle::random_tensor(gen, {257});
  EXPECT_EQ(axpy(0.3f, a, b), axpy(0.3f, a, b));
}

TEST(L2Distance, EqualIsZero) {
  const DenseTensor a({3}, {1, 2, 3});
  EXPECT_EQ(l2_distance(a, a), 0.0);
}

TEST(L2Distance, ThreeFourFive) { EXPECT_EQ(l2_distance(DenseTensor({2}, {3, 0}), DenseTensor({2}, {0, 4})), 5.0); }

TEST(L2Distance, MatchesDoubleOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_tensor(gen, {16});
    const auto b = oracle::random_tensor(gen, {16});
    double s = 0;
    for (int i = 0; i < 16; ++i) s += (double(a[i]) - double(b[i])) * (double(a[i]) - double(b[i]));
    EXPECT_NEAR(l2_distance(a, b), std::sqrt(s), 1e-6 * std::sqrt(s));
  }
}

TEST(L2Distance, ShapeMismatchThrows) { EXPECT_THROW(l2_distance(DenseTensor({2}), DenseTensor({3})), ShapeError); }

TEST(Rng, EqualSeedsGiveEqualStreams) {
  Rng a(42), b(42);
  for (int i = 0; i < 100000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, StreamsDiffer) {
  Rng a(42, 0), b(42, 1);
  EXPECT_NE(a.uniform(), b.uniform());
}

TEST(Rng, UniformRange) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(2.0, 3.0);
    EXPECT_GE(u, 2.0);
    EXPECT_LT(u, 3.0);
  }
}

}  // namespace
}  // namespace dlcmd
