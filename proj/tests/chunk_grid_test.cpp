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

#include <set>

#include "dlcmd/chunk_grid.hpp"

namespace dlcmd {
namespace {

TEST(ChunkGrid, OneDimensional) {
  const DenseTensor t({4}, {1, 2, 3, 4});
  const auto chunks = split_chunks(t, ChunkGrid({4}, {2}));
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0], (std::vector<float>{1, 2}));
  EXPECT_EQ(chunks[1], (std::vector<float>{3, 4}));
}

TEST(ChunkGrid, WholeTensorChunkIsRowMajor) {
  const DenseTensor t({2, 2}, {1, 2, 3, 4});
  const auto chunks = split_chunks(t, ChunkGrid({2, 2}, {2, 2}));
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0], (std::vector<float>{1, 2, 3, 4}));
}

TEST(ChunkGrid, FourByFourIntoTwoByTwo) {
  DenseTensor t({4, 4});
  for (int i = 0; i < 16; ++i) t[i] = static_cast<float>(i);
  const auto chunks = split_chunks(t, ChunkGrid({4, 4}, {2, 2}));
  ASSERT_EQ(chunks.size(), 4u);
  // Hand-enumerated blocks in lexicographic chunk order.
  EXPECT_EQ(chunks[0], (std::vector<float>{0, 1, 4, 5}));
  EXPECT_EQ(chunks[1], (std::vector<float>{2, 3, 6, 7}));
  EXPECT_EQ(chunks[2], (std::vector<float>{8, 9, 12, 13}));
  EXPECT_EQ(chunks[3], (std::vector<float>{10, 11, 14, 15}));
}

TEST(ChunkGrid, RejectsNonDividingChunk) {
  EXPECT_THROW(ChunkGrid({5}, {2}), ShapeError);
  EXPECT_THROW(ChunkGrid({4, 4}, {2}), ShapeError);
  EXPECT_THROW(ChunkGrid({4}, {0}), ShapeError);
}

std::vector<Shape> divisors_grid(const Shape& shape) {
  std::vector<Shape> out = {{}};
  for (auto n : shape) {
    std::vector<Shape> next;
    for (const auto& prefix : out) {
      for (std::int64_t s = 1; s <= n; ++s) {
        if (n % s != 0) continue;
        auto p = prefix;
        p.push_back(s);
        next.push_back(p);
      }
    }
    out = std::move(next);
  }
  return out;
}

// Expected flat index from chunk and within-chunk coordinates, computed
// independently of the library's index map.
std::int64_t brute_index(const Shape& shape, const Shape& chunk, std::int64_t c, std::int64_t o) {
  const std::size_t d = shape.size();
  Shape per(d), cc(d), oc(d);
  for (std::size_t a = 0; a < d; ++a) per[a] = shape[a] / chunk[a];
  for (std::size_t a = d; a-- > 0;) {
    cc[a] = c % per[a];
    c /= per[a];
    oc[a] = o % chunk[a];
    o /= chunk[a];
  }
  std::int64_t flat = 0;
  for (std::size_t a = 0; a < d; ++a) flat = flat * shape[a] + cc[a] * chunk[a] + oc[a];
  return flat;
}

TEST(ChunkGrid, ExhaustivePartition) {
  // Every grid of every shape with at most 4096 elements from this family.
  const std::vector<Shape> shapes = {{1}, {7}, {12}, {64}, {4096}, {4, 4}, {6, 10}, {16, 16}, {64, 64},
                                     {2, 3, 4}, {8, 8, 8}, {3, 1, 5}, {2, 2, 2, 2}, {4, 6, 2, 3}};
  for (const auto& shape : shapes) {
    for (const auto& chunk : divisors_grid(shape)) {
      const ChunkGrid g(shape, chunk);
      const auto volume = shape_volume(shape);
      ASSERT_EQ(g.element_count(), volume);
      std::vector<int> hits(static_cast<std::size_t>(volume), 0);
      for (std::int64_t c = 0; c < g.chunk_count(); ++c) {
        for (std::int64_t o = 0; o < g.chunk_volume(); ++o) {
          const auto idx = g.element_index(c, o);
          ASSERT_EQ(idx, brute_index(shape, chunk, c, o));
          ++hits[static_cast<std::size_t>(idx)];
        }
      }
      for (int h : hits) ASSERT_EQ(h, 1);
    }
  }
}

TEST(ChunkGrid, ReassemblyIsBitExact) {
  DenseTensor t({6, 10});
  for (int i = 0; i < 60; ++i) t[i] = 0.1f * static_cast<float>(i) - 2.7f;
  const ChunkGrid g({6, 10}, {3, 5});
  EXPECT_EQ(assemble_chunks(split_chunks(t, g), g), t);
}

TEST(ChunkGrid, LargestDivisor) {
  EXPECT_EQ(largest_divisor_at_most(16, 64), 16);
  EXPECT_EQ(largest_divisor_at_most(100, 64), 50);
  EXPECT_EQ(largest_divisor_at_most(7, 4), 1);
  EXPECT_EQ(largest_divisor_at_most(12, 8), 6);
}

TEST(ChunkGrid, ForTensorUsesLargestDivisorPerAxis) {
  const auto g = ChunkGrid::for_tensor({10, 16}, 8);
  EXPECT_EQ(g.chunk_shape(), (Shape{5, 8}));
  EXPECT_EQ(g.chunk_count(), 4);
}

}  // namespace
}  // namespace dlcmd
