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

#include <random>

#include "dlcmd/codec.hpp"
#include "dlcmd/collective.hpp"
#include "dlcmd/compression.hpp"
#include "oracles.hpp"

namespace dlcmd {
namespace {

std::vector<CompressedMomentum> sample_set(std::mt19937_64& gen, std::vector<ChunkGrid>& grids, std::int64_t k) {
  grids = {ChunkGrid({16, 8}, {4, 4}), ChunkGrid({8}, {8}), ChunkGrid({6, 6}, {3, 3})};
  std::vector<CompressedMomentum> set;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const auto m = oracle::random_tensor(gen, grids[i].tensor_shape());
    set.push_back(extract_top_k(m, grids[i], std::min(k, grids[i].chunk_volume()), static_cast<std::uint16_t>(i)).selected);
  }
  return set;
}

TEST(Codec, RoundTripIsBitIdentical) {
  std::mt19937_64 gen(8);
  std::vector<ChunkGrid> grids;
  const auto set = sample_set(gen, grids, 5);
  const auto bytes = encode_compressed(set);
  EXPECT_EQ(decode_compressed(bytes, grids), set);
}

TEST(Codec, SizeMatchesLayoutArithmetic) {
  std::mt19937_64 gen(8);
  std::vector<ChunkGrid> grids;
  const auto set = sample_set(gen, grids, 5);
  // 8-byte header per tensor; 8 bytes per coefficient.
  const std::uint64_t expected = (8 + 8 * 5 * 8) + (8 + 1 * 5 * 8) + (8 + 4 * 5 * 8);
  EXPECT_EQ(encode_compressed(set).size(), expected);
  EXPECT_EQ(payload_size(grids, 5), expected);
}

TEST(Codec, LittleEndianLayout) {
  CompressedMomentum q{3, ChunkGrid({2}, {2}), 1, {1}, {1.0f}};
  const auto bytes = encode_compressed(std::vector{q});
  const Bytes expected = {3, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0x00, 0x00, 0x80, 0x3F};
  EXPECT_EQ(bytes, expected);
}

TEST(Codec, RejectsTruncation) {
  std::mt19937_64 gen(8);
  std::vector<ChunkGrid> grids;
  auto bytes = encode_compressed(sample_set(gen, grids, 2));
  bytes.pop_back();
  EXPECT_THROW(decode_compressed(bytes, grids), DecodeError);
}

TEST(Codec, RejectsTrailingBytes) {
  std::mt19937_64 gen(8);
  std::vector<ChunkGrid> grids;
  auto bytes = encode_compressed(sample_set(gen, grids, 2));
  bytes.push_back(0);
  EXPECT_THROW(decode_compressed(bytes, grids), DecodeError);
}

TEST(Codec, RejectsUnknownTensorAndBadIndex) {
  CompressedMomentum q{7, ChunkGrid({4}, {4}), 1, {2}, {1.0f}};
  const std::vector<ChunkGrid> grids = {ChunkGrid({4}, {4})};
  EXPECT_THROW(decode_compressed(encode_compressed(std::vector{q}), grids), DecodeError);
  auto bytes = encode_compressed(std::vector{CompressedMomentum{0, grids[0], 1, {2}, {1.0f}}});
  bytes[8] = 9;  // index beyond the chunk volume
  EXPECT_THROW(decode_compressed(bytes, grids), DecodeError);
}

TEST(PayloadSize, SingleChunk) {
  const std::vector<ChunkGrid> grids = {ChunkGrid({8, 8}, {8, 8})};
  EXPECT_EQ(payload_size(grids, 8), 72u);
}

TEST(PayloadSize, LinearInK) {
  const std::vector<ChunkGrid> grids = {ChunkGrid({32, 32}, {8, 8}), ChunkGrid({32}, {16})};
  EXPECT_EQ(payload_size(grids, 8) - 16, 2 * (payload_size(grids, 4) - 16));
}

TEST(PayloadSize, ClampsKToChunkVolume) {
  const std::vector<ChunkGrid> grids = {ChunkGrid({4}, {2})};
  EXPECT_EQ(effective_k(grids[0], 10), 2);
  EXPECT_EQ(payload_size(grids, 10), 8u + 2 * 2 * 8);
}

TEST(PayloadSize, DenseIsFourBytesPerElement) {
  const std::vector<Shape> shapes = {{16, 2}, {16}};
  EXPECT_EQ(dense_payload_size(shapes), 4u * 48);
}

}  // namespace
}  // namespace dlcmd
