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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dlcmd/models.hpp"

namespace dlcmd {

enum class DatasetKind : std::uint8_t { quadratic = 1, blobs = 2, char_lm = 3 };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_for(Architecture arch);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::blobs;
  std::int64_t size = 2048;
  std::int64_t feature_dim = 2;
  std::int64_t vocab = 16;
  std::int64_t context = 8;
  double separation = 4.0;  // distance between blob means, in standard deviations
  double eval_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetKind kind = DatasetKind::blobs;
  std::uint64_t seed = 0;
  std::int64_t examples = 0;
  std::int64_t feature_dim = 0;
  std::int64_t vocab = 0;
  std::int64_t context = 0;
  std::vector<float> features;        // examples x feature_dim (quadratic, blobs)
  std::vector<float> targets;         // quadratic
  std::vector<std::int32_t> labels;   // blobs class, char-lm next token
  std::vector<std::int32_t> tokens;   // char-lm windows, examples x context
  std::vector<std::int64_t> train;    // sorted
  std::vector<std::int64_t> eval;     // sorted, disjoint from train

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// quadratic: rows a_i ~ N(0, I), b = A theta* for a hidden theta*, so the
//            optimum has zero loss; rejects draws with condition number > 100.
// blobs:     two unit-variance Gaussian clusters whose means are
//            `separation` apart, labels alternating.
// char-lm:   windows over text from a seeded order-2 Markov source.
Dataset generate(const DatasetSpec& spec);

// Throws if `spec` cannot consume `data`.
void check_compatible(const ModelSpec& spec, const Dataset& data);

Batch make_batch(const Dataset& data, std::span<const std::int64_t> indices);

struct Shard {
  int rank = 0;
  std::vector<std::int64_t> indices;
};

// Seeded permutation of the train split dealt round-robin to `workers`.
std::vector<Shard> shard(const Dataset& data, int workers, std::uint64_t seed);

// Sequential passes over a per-epoch shuffle of `pool`. The stream of global
// batches (batch * slots examples each) is split into `slots` consecutive
// slices and this sampler returns slice `slot`; with slots = 1 it yields plain
// batches.
class BatchSampler {
 public:
  BatchSampler(std::vector<std::int64_t> pool, std::uint64_t seed, std::uint64_t stream, std::int64_t batch,
               std::int64_t slot = 0, std::int64_t slots = 1);

  std::vector<std::int64_t> next();

 private:
  void refill();

  std::vector<std::int64_t> pool_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::int64_t batch_;
  std::int64_t slot_;
  std::int64_t slots_;
  std::uint64_t epoch_ = 0;
  std::vector<std::int64_t> order_;
  std::size_t pos_ = 0;
};

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace dlcmd
