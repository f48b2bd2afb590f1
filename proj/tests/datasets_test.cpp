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

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "dlcmd/bytes.hpp"
#include "dlcmd/datasets.hpp"
#include "dlcmd/rng.hpp"

namespace dlcmd {
namespace {

DatasetSpec spec_for(DatasetKind kind, std::int64_t size, std::uint64_t seed = 1) {
  DatasetSpec s;
  s.kind = kind;
  s.size = size;
  s.seed = seed;
  s.feature_dim = kind == DatasetKind::quadratic ? 8 : 2;
  return s;
}

TEST(Datasets, RegenerationIsBitwiseEqual) {
  for (auto kind : {DatasetKind::quadratic, DatasetKind::blobs, DatasetKind::char_lm}) {
    EXPECT_EQ(generate(spec_for(kind, 300)), generate(spec_for(kind, 300)));
    EXPECT_NE(generate(spec_for(kind, 300, 1)), generate(spec_for(kind, 300, 2)));
  }
}

TEST(Datasets, SplitIsDisjointAndComplete) {
  const auto d = generate(spec_for(DatasetKind::blobs, 1000));
  EXPECT_EQ(d.eval.size(), 100u);
  EXPECT_TRUE(std::is_sorted(d.train.begin(), d.train.end()));
  EXPECT_TRUE(std::is_sorted(d.eval.begin(), d.eval.end()));
  std::set<std::int64_t> all(d.train.begin(), d.train.end());
  for (auto e : d.eval) EXPECT_TRUE(all.insert(e).second);
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_EQ(*all.rbegin(), 999);
}

TEST(Datasets, QuadraticHasZeroLossOptimum) {
  const auto d = generate(spec_for(DatasetKind::quadratic, 256));
  // Least squares on the full set recovers a solution with zero residual.
  Eigen::MatrixXd a(d.examples, d.feature_dim);
  Eigen::VectorXd b(d.examples);
  for (std::int64_t i = 0; i < d.examples; ++i) {
    for (std::int64_t j = 0; j < d.feature_dim; ++j) a(i, j) = d.features[static_cast<std::size_t>(i * d.feature_dim + j)];
    b[i] = d.targets[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd theta = a.colPivHouseholderQr().solve(b);
  EXPECT_LE((a * theta - b).norm() / b.norm(), 1e-5);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto sv = svd.singularValues();
  EXPECT_LE(sv[0] / sv[sv.size() - 1], 100.0);
}

TEST(Datasets, QuadraticRejectsTooFewRows) {
  EXPECT_THROW(generate(spec_for(DatasetKind::quadratic, 20)), std::invalid_argument);
}

TEST(Datasets, BlobsBayesAccuracy) {
  // The Bayes rule for two unit-variance Gaussians with equal priors is the
  // perpendicular bisector of the means; estimate the means from the data and
  // score that rule.
  const auto d = generate(spec_for(DatasetKind::blobs, 20000));
  Eigen::Vector2d mean[2] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  int count[2] = {0, 0};
  for (std::int64_t i = 0; i < d.examples; ++i) {
    const int y = d.labels[static_cast<std::size_t>(i)];
    mean[y] += Eigen::Vector2d(d.features[static_cast<std::size_t>(2 * i)], d.features[static_cast<std::size_t>(2 * i + 1)]);
    ++count[y];
  }
  EXPECT_EQ(count[0], count[1]);
  mean[0] /= count[0];
  mean[1] /= count[1];
  EXPECT_NEAR((mean[1] - mean[0]).norm(), 4.0, 0.1);
  int correct = 0;
  for (std::int64_t i = 0; i < d.examples; ++i) {
    const Eigen::Vector2d x(d.features[static_cast<std::size_t>(2 * i)], d.features[static_cast<std::size_t>(2 * i + 1)]);
    const int guess = (x - mean[1]).squaredNorm() < (x - mean[0]).squaredNorm() ? 1 : 0;
    correct += guess == d.labels[static_cast<std::size_t>(i)];
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(d.examples), 0.97);
}

TEST(Datasets, CharLmTokensInRange) {
  auto s = spec_for(DatasetKind::char_lm, 500);
  s.vocab = 12;
  s.context = 5;
  const auto d = generate(s);
  EXPECT_EQ(d.tokens.size(), 500u * 5);
  for (auto t : d.tokens) {
    EXPECT_GE(t, 0);
    EXPECT_LT(t, 12);
  }
  for (auto y : d.labels) {
    EXPECT_GE(y, 0);
    EXPECT_LT(y, 12);
  }
  // Windows slide over one text, so consecutive windows overlap.
  EXPECT_EQ(d.tokens[5], d.tokens[1]);
  EXPECT_EQ(d.labels[0], d.tokens[5 + 4]);
}

TEST(Shard, SingleWorkerGetsEverything) {
  const auto d = generate(spec_for(DatasetKind::blobs, 200));
  const auto shards = shard(d, 1, 3);
  ASSERT_EQ(shards.size(), 1u);
  auto sorted = shards[0].indices;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, d.train);
}

TEST(Shard, EqualSizes) {
  Dataset d;
  d.train.resize(100);
  std::iota(d.train.begin(), d.train.end(), 0);
  for (const auto& s : shard(d, 4, 0)) EXPECT_EQ(s.indices.size(), 25u);
}

TEST(Shard, PartitionHoldsForManyLayouts) {
  for (std::int64_t size : {10, 37, 128, 1001}) {
    Dataset d;
    d.train.resize(static_cast<std::size_t>(size));
    std::iota(d.train.begin(), d.train.end(), 1000);
    for (int w : {1, 2, 3, 4, 7}) {
      const auto shards = shard(d, w, 42);
      std::multiset<std::int64_t> seen;
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& s : shards) {
        seen.insert(s.indices.begin(), s.indices.end());
        lo = std::min(lo, s.indices.size());
        hi = std::max(hi, s.indices.size());
      }
      EXPECT_EQ(std::vector<std::int64_t>(seen.begin(), seen.end()), d.train);
      EXPECT_LE(hi - lo, 1u);
      EXPECT_EQ(shards[0].indices, shard(d, w, 42)[0].indices);
    }
  }
}

TEST(Shard, TooManyWorkersThrows) {
  Dataset d;
  d.train = {1, 2};
  EXPECT_THROW(shard(d, 3, 0), std::invalid_argument);
}

TEST(BatchSampler, CoversEpochBeforeRepeating) {
  std::vector<std::int64_t> pool(20);
  std::iota(pool.begin(), pool.end(), 0);
  BatchSampler s(pool, 1, 0, 5);
  std::vector<std::int64_t> seen;
  for (int i = 0; i < 4; ++i) {
    const auto b = s.next();
    seen.insert(seen.end(), b.begin(), b.end());
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, pool);
}

TEST(BatchSampler, SlotsSliceTheGlobalBatch) {
  std::vector<std::int64_t> pool(64);
  std::iota(pool.begin(), pool.end(), 0);
  BatchSampler whole(pool, 9, 0, 8);
  BatchSampler first(pool, 9, 0, 4, 0, 2);
  BatchSampler second(pool, 9, 0, 4, 1, 2);
  for (int step = 0; step < 30; ++step) {
    auto a = first.next();
    const auto b = second.next();
    a.insert(a.end(), b.begin(), b.end());
    EXPECT_EQ(a, whole.next());
  }
}

TEST(DatasetFile, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "dlcmd_dataset_roundtrip.bin";
  for (auto kind : {DatasetKind::quadratic, DatasetKind::blobs, DatasetKind::char_lm}) {
    const auto d = generate(spec_for(kind, 300));
    save_dataset(path, d);
    EXPECT_EQ(load_dataset(path), d);
  }
  std::filesystem::remove(path);
}

TEST(DatasetFile, RejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "dlcmd_dataset_garbage.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "DSETxxxx";
  }
  EXPECT_THROW(load_dataset(path), std::exception);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  EXPECT_THROW(load_dataset(path), DecodeError);
  std::filesystem::remove(path);
}

TEST(Datasets, CompatibilityChecks) {
  const auto blobs = generate(spec_for(DatasetKind::blobs, 100));
  EXPECT_NO_THROW(check_compatible(ModelSpec{Architecture::mlp, 2, {4}, 2, 16, 8}, blobs));
  EXPECT_THROW(check_compatible(ModelSpec{Architecture::char_lm, 2, {4}, 2, 16, 8}, blobs), std::invalid_argument);
  EXPECT_THROW(check_compatible(ModelSpec{Architecture::mlp, 3, {4}, 2, 16, 8}, blobs), std::invalid_argument);
}

}  // namespace
}  // namespace dlcmd
