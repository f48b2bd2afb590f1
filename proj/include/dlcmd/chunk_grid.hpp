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
#include <memory>
#include <span>
#include <vector>

#include "dlcmd/tensor.hpp"

namespace dlcmd {

// Axis-aligned partition of a tensor into blocks of `chunk_shape`. Chunks are
// ordered lexicographically over chunk coordinates and elements inside a
// chunk are row-major, so a (chunk, offset) pair means the same element on
// every worker.
class ChunkGrid {
 public:
  ChunkGrid(Shape tensor_shape, Shape chunk_shape);

  // Per axis, the largest divisor of the extent that does not exceed `edge`.
  static ChunkGrid for_tensor(const Shape& tensor_shape, std::int64_t edge);

  const Shape& tensor_shape() const { return tensor_shape_; }
  const Shape& chunk_shape() const { return chunk_shape_; }
  const Shape& chunks_per_axis() const { return chunks_per_axis_; }
  std::int64_t chunk_volume() const { return chunk_volume_; }
  std::int64_t chunk_count() const { return chunk_count_; }
  std::int64_t element_count() const { return chunk_volume_ * chunk_count_; }

  // Flat row-major tensor index of element `offset` of chunk `chunk`.
  std::int64_t element_index(std::int64_t chunk, std::int64_t offset) const {
    return (*index_map_)[static_cast<std::size_t>(chunk * chunk_volume_ + offset)];
  }

  friend bool operator==(const ChunkGrid& a, const ChunkGrid& b) {
    return a.tensor_shape_ == b.tensor_shape_ && a.chunk_shape_ == b.chunk_shape_;
  }

 private:
  Shape tensor_shape_;
  Shape chunk_shape_;
  Shape chunks_per_axis_;
  std::int64_t chunk_volume_ = 1;
  std::int64_t chunk_count_ = 1;
  std::shared_ptr<const std::vector<std::int64_t>> index_map_;
};

std::int64_t largest_divisor_at_most(std::int64_t n, std::int64_t edge);

template <typename Scalar, typename Out>
void gather_chunk(const BasicTensor<Scalar>& t, const ChunkGrid& grid, std::int64_t chunk, Out& out) {
  for (std::int64_t o = 0; o < grid.chunk_volume(); ++o) out[o] = t[grid.element_index(chunk, o)];
}

template <typename Scalar, typename In>
void scatter_chunk(const In& in, const ChunkGrid& grid, std::int64_t chunk, BasicTensor<Scalar>& t) {
  for (std::int64_t o = 0; o < grid.chunk_volume(); ++o) t[grid.element_index(chunk, o)] = in[o];
}

// Copies every chunk out in chunk order.
std::vector<std::vector<float>> split_chunks(const DenseTensor& t, const ChunkGrid& grid);

// Inverse of split_chunks.
DenseTensor assemble_chunks(const std::vector<std::vector<float>>& chunks, const ChunkGrid& grid);

}  // namespace dlcmd
