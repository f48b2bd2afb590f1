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

#include "dlcmd/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dlcmd/dct.hpp"

namespace dlcmd {

namespace {

void require_grid(const DenseTensor& m, const ChunkGrid& grid, const char* op) {
  if (m.shape() != grid.tensor_shape()) {
    throw ShapeError(std::string(op) + ": grid " + shape_string(grid.tensor_shape()) + " does not match tensor " +
                     shape_string(m.shape()));
  }
}

Eigen::VectorXd sparse_spectrum(const CompressedMomentum& q, std::int64_t chunk) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(q.grid.chunk_volume());
  for (std::int64_t j = 0; j < q.k; ++j) {
    const auto slot = static_cast<std::size_t>(chunk * q.k + j);
    coeffs[q.indices[slot]] = q.amplitudes[slot];
  }
  return coeffs;
}

void validate(const CompressedMomentum& q) {
  const auto expected = static_cast<std::size_t>(q.grid.chunk_count() * q.k);
  if (q.indices.size() != expected || q.amplitudes.size() != expected) {
    throw std::invalid_argument("compressed momentum: payload length does not match chunk count * k");
  }
  for (auto idx : q.indices) {
    if (idx >= q.grid.chunk_volume()) {
      throw std::out_of_range("compressed momentum: frequency index " + std::to_string(idx) + " >= chunk volume " +
                              std::to_string(q.grid.chunk_volume()));
    }
  }
}

}  // namespace

Extraction extract_top_k(const DenseTensor& m, const ChunkGrid& grid, std::int64_t k, std::uint16_t tensor_id) {
  require_grid(m, grid, "extract_top_k");
  const std::int64_t volume = grid.chunk_volume();
  if (k < 1 || k > volume) {
    throw std::out_of_range("extract_top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(volume) + "]");
  }
  require_finite(m, "extract_top_k");
  const auto plan = plan_for(grid.chunk_shape());

  Extraction out{CompressedMomentum{tensor_id, grid, k, {}, {}}, DenseTensor(m.shape())};
  auto& q = out.selected;
  q.indices.reserve(static_cast<std::size_t>(grid.chunk_count() * k));
  q.amplitudes.reserve(q.indices.capacity());

  Eigen::VectorXd chunk(volume);
  std::vector<std::uint32_t> order(static_cast<std::size_t>(volume));
  for (std::int64_t c = 0; c < grid.chunk_count(); ++c) {
    gather_chunk(m, grid, c, chunk);
    const Eigen::VectorXd coeffs = dct_forward(chunk, *plan);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double ma = std::abs(coeffs[a]);
      const double mb = std::abs(coeffs[b]);
      return ma > mb || (ma == mb && a < b);
    });
    Eigen::VectorXd kept = Eigen::VectorXd::Zero(volume);
    for (std::int64_t j = 0; j < k; ++j) {
      const auto idx = order[static_cast<std::size_t>(j)];
      const auto amp = static_cast<float>(coeffs[idx]);
      q.indices.push_back(idx);
      q.amplitudes.push_back(amp);
      kept[idx] = amp;
    }
    const Eigen::VectorXd rec = dct_inverse(kept, *plan);
    scatter_chunk(rec.cast<float>().eval(), grid, c, out.reconstruction);
  }
  return out;
}

DenseTensor reconstruct(const CompressedMomentum& q) {
  validate(q);
  const auto plan = plan_for(q.grid.chunk_shape());
  DenseTensor out(q.grid.tensor_shape());
  for (std::int64_t c = 0; c < q.grid.chunk_count(); ++c) {
    const Eigen::VectorXd rec = dct_inverse(sparse_spectrum(q, c), *plan);
    scatter_chunk(rec.cast<float>().eval(), q.grid, c, out);
  }
  return out;
}

DenseTensor subtract_selected(const DenseTensor& m, const CompressedMomentum& q) {
  require_grid(m, q.grid, "subtract_selected");
  validate(q);
  const auto plan = plan_for(q.grid.chunk_shape());
  DenseTensor out(m.shape());
  Eigen::VectorXd chunk(q.grid.chunk_volume());
  for (std::int64_t c = 0; c < q.grid.chunk_count(); ++c) {
    gather_chunk(m, q.grid, c, chunk);
    const Eigen::VectorXd residual = chunk - dct_inverse(sparse_spectrum(q, c), *plan);
    scatter_chunk(residual.cast<float>().eval(), q.grid, c, out);
  }
  require_finite(out, "subtract_selected");
  return out;
}

FrequencyAccumulator::FrequencyAccumulator(ChunkGrid grid)
    : grid_(std::move(grid)), acc_(static_cast<std::size_t>(grid_.element_count()), 0.0) {}

void FrequencyAccumulator::add(const CompressedMomentum& q) {
  if (!(q.grid == grid_)) throw ShapeError("FrequencyAccumulator::add: grid mismatch");
  validate(q);
  const std::int64_t volume = grid_.chunk_volume();
  for (std::int64_t c = 0; c < grid_.chunk_count(); ++c) {
    for (std::int64_t j = 0; j < q.k; ++j) {
      const auto slot = static_cast<std::size_t>(c * q.k + j);
      acc_[static_cast<std::size_t>(c * volume + q.indices[slot])] += q.amplitudes[slot];
    }
  }
}

DenseTensor FrequencyAccumulator::mean_inverse(std::int64_t count) const {
  if (count < 1) throw std::invalid_argument("FrequencyAccumulator::mean_inverse: count must be positive");
  const auto plan = plan_for(grid_.chunk_shape());
  const std::int64_t volume = grid_.chunk_volume();
  DenseTensor out(grid_.tensor_shape());
  Eigen::VectorXd coeffs(volume);
  for (std::int64_t c = 0; c < grid_.chunk_count(); ++c) {
    for (std::int64_t i = 0; i < volume; ++i) {
      coeffs[i] = acc_[static_cast<std::size_t>(c * volume + i)] / static_cast<double>(count);
    }
    const Eigen::VectorXd rec = dct_inverse(coeffs, *plan);
    scatter_chunk(rec.cast<float>().eval(), grid_, c, out);
  }
  return out;
}

}  // namespace dlcmd
