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

#include "dlcmd/chunk_grid.hpp"

namespace dlcmd {

std::int64_t largest_divisor_at_most(std::int64_t n, std::int64_t edge) {
  if (n <= 0 || edge <= 0) throw ShapeError("largest_divisor_at_most: arguments must be positive");
  for (std::int64_t d = std::min(n, edge); d > 1; --d) {
    if (n % d == 0) return d;
  }
  return 1;
}

ChunkGrid::ChunkGrid(Shape tensor_shape, Shape chunk_shape)
    : tensor_shape_(std::move(tensor_shape)), chunk_shape_(std::move(chunk_shape)) {
  if (tensor_shape_.empty() || tensor_shape_.size() != chunk_shape_.size()) {
    throw ShapeError("chunk grid: chunk shape " + shape_string(chunk_shape_) +
                     " has wrong rank for tensor " + shape_string(tensor_shape_));
  }
  const auto rank = tensor_shape_.size();
  chunks_per_axis_.resize(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    const auto n = tensor_shape_[a];
    const auto s = chunk_shape_[a];
    if (n <= 0 || s <= 0 || n % s != 0) {
      throw ShapeError("chunk grid: chunk edge " + std::to_string(s) + " does not divide extent " +
                       std::to_string(n) + " on axis " + std::to_string(a));
    }
    chunks_per_axis_[a] = n / s;
    chunk_volume_ *= s;
    chunk_count_ *= n / s;
  }

  // Row-major strides of the full tensor.
  std::vector<std::int64_t> stride(rank, 1);
  for (std::size_t a = rank - 1; a > 0; --a) stride[a - 1] = stride[a] * tensor_shape_[a];

  auto map = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(chunk_count_ * chunk_volume_));
  std::vector<std::int64_t> chunk_coord(rank), offset_coord(rank);
  for (std::int64_t c = 0; c < chunk_count_; ++c) {
    std::int64_t rem = c;
    for (std::size_t a = rank; a-- > 0;) {
      chunk_coord[a] = rem % chunks_per_axis_[a];
      rem /= chunks_per_axis_[a];
    }
    for (std::int64_t o = 0; o < chunk_volume_; ++o) {
      rem = o;
      for (std::size_t a = rank; a-- > 0;) {
        offset_coord[a] = rem % chunk_shape_[a];
        rem /= chunk_shape_[a];
      }
      std::int64_t flat = 0;
      for (std::size_t a = 0; a < rank; ++a) flat += (chunk_coord[a] * chunk_shape_[a] + offset_coord[a]) * stride[a];
      (*map)[static_cast<std::size_t>(c * chunk_volume_ + o)] = flat;
    }
  }
  index_map_ = std::move(map);
}

ChunkGrid ChunkGrid::for_tensor(const Shape& tensor_shape, std::int64_t edge) {
  Shape chunk(tensor_shape.size());
  for (std::size_t a = 0; a < tensor_shape.size(); ++a) chunk[a] = largest_divisor_at_most(tensor_shape[a], edge);
  return ChunkGrid(tensor_shape, std::move(chunk));
}

std::vector<std::vector<float>> split_chunks(const DenseTensor& t, const ChunkGrid& grid) {
  if (t.shape() != grid.tensor_shape()) throw ShapeError("split_chunks: grid does not match tensor shape");
  std::vector<std::vector<float>> chunks(static_cast<std::size_t>(grid.chunk_count()),
                                         std::vector<float>(static_cast<std::size_t>(grid.chunk_volume())));
  for (std::int64_t c = 0; c < grid.chunk_count(); ++c) gather_chunk(t, grid, c, chunks[static_cast<std::size_t>(c)]);
  return chunks;
}

DenseTensor assemble_chunks(const std::vector<std::vector<float>>& chunks, const ChunkGrid& grid) {
  if (static_cast<std::int64_t>(chunks.size()) != grid.chunk_count()) {
    throw ShapeError("assemble_chunks: expected " + std::to_string(grid.chunk_count()) + " chunks");
  }
  DenseTensor t(grid.tensor_shape());
  for (std::int64_t c = 0; c < grid.chunk_count(); ++c) {
    const auto& chunk = chunks[static_cast<std::size_t>(c)];
    if (static_cast<std::int64_t>(chunk.size()) != grid.chunk_volume()) throw ShapeError("assemble_chunks: bad chunk length");
    scatter_chunk(chunk, grid, c, t);
  }
  return t;
}

}  // namespace dlcmd
