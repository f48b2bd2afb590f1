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
#include <vector>

#include "dlcmd/chunk_grid.hpp"
#include "dlcmd/tensor.hpp"

namespace dlcmd {

// Top-k frequency selection of one tensor: per chunk, k flat frequency
// indices (row-major over per-axis frequencies) and their amplitudes, stored
// chunk-major and ordered by decreasing |amplitude| inside each chunk.
struct CompressedMomentum {
  std::uint16_t tensor_id = 0;
  ChunkGrid grid;
  std::int64_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<float> amplitudes;

  std::int64_t chunk_count() const { return grid.chunk_count(); }

  friend bool operator==(const CompressedMomentum&, const CompressedMomentum&) = default;
};

struct Extraction {
  CompressedMomentum selected;
  DenseTensor reconstruction;  // inverse transform of the selected coefficients only
};

// Per chunk, keeps the k largest-|amplitude| DCT coefficients; ties go to the
// smaller flat index.
Extraction extract_top_k(const DenseTensor& m, const ChunkGrid& grid, std::int64_t k, std::uint16_t tensor_id = 0);

// Dense tensor whose spectrum is q's coefficients and zero elsewhere.
DenseTensor reconstruct(const CompressedMomentum& q);

// m minus the reconstruction of q, rounded once from double.
DenseTensor subtract_selected(const DenseTensor& m, const CompressedMomentum& q);

// Sums sparse payloads in frequency space. Workers may pick different
// indices, so averaging happens on coefficients and a single inverse
// transform per chunk recovers the mean of the per-worker reconstructions.
class FrequencyAccumulator {
 public:
  explicit FrequencyAccumulator(ChunkGrid grid);

  void add(const CompressedMomentum& q);

  // Inverse transform of (sum / count).
  DenseTensor mean_inverse(std::int64_t count) const;

  const ChunkGrid& grid() const { return grid_; }
  const std::vector<double>& coefficients() const { return acc_; }

 private:
  ChunkGrid grid_;
  std::vector<double> acc_;
};

}  // namespace dlcmd
