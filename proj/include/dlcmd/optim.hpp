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
#include "dlcmd/collective.hpp"
#include "dlcmd/tensor.hpp"

namespace dlcmd {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  AdamWState() = default;
  explicit AdamWState(const Shape& shape) : first(shape), second(shape) {}

  DenseTensor first;
  DenseTensor second;
  std::int64_t step = 0;
};

// Decoupled weight decay: the decay term uses the pre-step parameters.
void adamw_step(DenseTensor& param, const DenseTensor& grad, AdamWState& state, const AdamWConfig& config);

// Nesterov outer step on a descent-oriented pseudo-gradient `delta`:
//   momentum <- beta * momentum + delta
//   return anchor - lr * (delta + beta * momentum)
DenseTensor nesterov_outer(const DenseTensor& anchor, const DenseTensor& delta, DenseTensor& momentum, double beta,
                           double lr);

struct OuterConfig {
  double beta = 0.9;   // momentum decay
  double alpha = 0.5;  // weight of the local signal against the shared one
  double lr = 0.7;
  std::int64_t k = 32;  // per chunk, clamped to each tensor's chunk volume
};

// Per-worker state of the decoupled outer optimizer. `residual` holds the
// momentum left after the synchronized frequencies were drained.
struct OuterState {
  OuterState(const ParamSet& params, std::vector<ChunkGrid> grids, OuterConfig config);

  OuterConfig config;
  std::vector<ChunkGrid> grids;
  ParamSet residual;
};

struct OuterRoundStats {
  std::uint64_t payload_bytes = 0;
};

// One synchronization of the decoupled-momentum method. On entry `params`
// holds the worker's parameters after its inner steps and `anchor` the
// parameters it started the round from. For every tensor, with the
// pseudo-gradient g = anchor - params:
//   m <- beta m + g
//   drain the top-k frequencies of m into q and subtract their reconstruction
//   Q <- mean over workers of reconstruct(q), summed in frequency space
//   m <- m + alpha Q
//   params <- anchor - lr (alpha g + alpha beta m + (1 - alpha) Q)
OuterRoundStats decoupled_outer_round(ParamSet& params, const ParamSet& anchor, OuterState& state, Collective& sync,
                                      std::uint32_t round);

// One decoupled-momentum step applied directly to gradients:
//   m <- beta m + grad; drain top-k of m into q; params <- params - lr Q.
OuterRoundStats demo_step(ParamSet& params, const ParamSet& grads, OuterState& state, Collective& sync,
                          std::uint32_t round, double lr);

}  // namespace dlcmd
