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

#include "dlcmd/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "dlcmd/codec.hpp"
#include "dlcmd/compression.hpp"

namespace dlcmd {

void adamw_step(DenseTensor& param, const DenseTensor& grad, AdamWState& state, const AdamWConfig& config) {
  require_same_shape(param, grad, "adamw_step");
  require_finite(grad, "adamw_step gradient");
  if (state.first.shape() != param.shape()) state = AdamWState(param.shape());

  ++state.step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::int64_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = b1 * state.first[i] + (1.0 - b1) * g;
    const double v = b2 * state.second[i] + (1.0 - b2) * g * g;
    state.first[i] = static_cast<float>(m);
    state.second[i] = static_cast<float>(v);
    const double m_hat = static_cast<double>(state.first[i]) / correction1;
    const double v_hat = static_cast<double>(state.second[i]) / correction2;
    const double theta = param[i];
    param[i] = static_cast<float>(theta - config.lr * (m_hat / (std::sqrt(v_hat) + config.eps)) -
                                  config.lr * config.weight_decay * theta);
  }
  require_finite(param, "adamw_step");
}

DenseTensor nesterov_outer(const DenseTensor& anchor, const DenseTensor& delta, DenseTensor& momentum, double beta,
                           double lr) {
  require_same_shape(anchor, delta, "nesterov_outer");
  require_same_shape(anchor, momentum, "nesterov_outer");
  require_finite(delta, "nesterov_outer delta");
  DenseTensor out(anchor.shape());
  for (std::int64_t i = 0; i < anchor.size(); ++i) {
    const double d = delta[i];
    momentum[i] = static_cast<float>(beta * momentum[i] + d);
    out[i] = static_cast<float>(anchor[i] - lr * (d + beta * static_cast<double>(momentum[i])));
  }
  require_finite(out, "nesterov_outer");
  return out;
}

OuterState::OuterState(const ParamSet& params, std::vector<ChunkGrid> grids_in, OuterConfig config_in)
    : config(config_in), grids(std::move(grids_in)) {
  if (!(config.beta >= 0.0 && config.beta < 1.0)) throw std::invalid_argument("outer optimizer: beta must be in [0, 1)");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw std::invalid_argument("outer optimizer: alpha must be in [0, 1]");
  if (config.k < 1) throw std::invalid_argument("outer optimizer: k must be positive");
  if (grids.size() != params.size()) throw std::invalid_argument("outer optimizer: one chunk grid per tensor required");
  residual.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grids[i].tensor_shape() != params[i].shape()) throw ShapeError("outer optimizer: grid does not match tensor");
    residual.emplace_back(params[i].shape());
  }
}

namespace {

// Drains the top-k frequencies of every residual tensor and returns the
// worker-averaged reconstruction Q per tensor.
ParamSet drain_and_synchronize(OuterState& state, Collective& sync, std::uint32_t round, OuterRoundStats& stats) {
  const std::size_t n = state.residual.size();
  std::vector<CompressedMomentum> selected;
  selected.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& grid = state.grids[i];
    auto ex = extract_top_k(state.residual[i], grid, effective_k(grid, state.config.k), static_cast<std::uint16_t>(i));
    auto& m = state.residual[i];
    for (std::int64_t j = 0; j < m.size(); ++j) {
      m[j] = static_cast<float>(static_cast<double>(m[j]) - static_cast<double>(ex.reconstruction[j]));
    }
    selected.push_back(std::move(ex.selected));
  }

  const Bytes payload = encode_compressed(selected);
  stats.payload_bytes = payload.size();
  const auto gathered = sync.all_gather(round, payload);

  std::vector<FrequencyAccumulator> acc;
  acc.reserve(n);
  for (const auto& g : state.grids) acc.emplace_back(g);
  for (std::size_t r = 0; r < gathered.size(); ++r) {
    std::vector<CompressedMomentum> peer;
    try {
      peer = decode_compressed(gathered[r], state.grids);
    } catch (const DecodeError& e) {
      throw MalformedFrameError("payload from rank " + std::to_string(r) + ": " + e.what(), static_cast<int>(r));
    }
    if (peer.size() != n) {
      throw MalformedFrameError("rank " + std::to_string(r) + " sent " + std::to_string(peer.size()) +
                                    " tensors, expected " + std::to_string(n),
                                static_cast<int>(r));
    }
    for (const auto& q : peer) acc[q.tensor_id].add(q);
  }

  ParamSet shared;
  shared.reserve(n);
  for (const auto& a : acc) shared.push_back(a.mean_inverse(static_cast<std::int64_t>(gathered.size())));
  return shared;
}

}  // namespace

OuterRoundStats decoupled_outer_round(ParamSet& params, const ParamSet& anchor, OuterState& state, Collective& sync,
                                      std::uint32_t round) {
  const std::size_t n = params.size();
  if (anchor.size() != n || state.residual.size() != n) throw ShapeError("decoupled_outer_round: tensor count mismatch");
  const double beta = state.config.beta;
  const double alpha = state.config.alpha;

  ParamSet pseudo_grad;
  pseudo_grad.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    require_same_shape(params[i], anchor[i], "decoupled_outer_round");
    DenseTensor g(params[i].shape());
    auto& m = state.residual[i];
    for (std::int64_t j = 0; j < g.size(); ++j) {
      g[j] = static_cast<float>(static_cast<double>(anchor[i][j]) - static_cast<double>(params[i][j]));
      m[j] = static_cast<float>(beta * m[j] + static_cast<double>(g[j]));
    }
    require_finite(m, "decoupled_outer_round momentum");
    pseudo_grad.push_back(std::move(g));
  }

  OuterRoundStats stats;
  const ParamSet shared = drain_and_synchronize(state, sync, round, stats);

  for (std::size_t i = 0; i < n; ++i) {
    auto& m = state.residual[i];
    const auto& g = pseudo_grad[i];
    const auto& q = shared[i];
    for (std::int64_t j = 0; j < m.size(); ++j) {
      m[j] = static_cast<float>(static_cast<double>(m[j]) + alpha * q[j]);
      const double update = alpha * g[j] + alpha * beta * m[j] + (1.0 - alpha) * q[j];
      params[i][j] = static_cast<float>(anchor[i][j] - state.config.lr * update);
    }
    require_finite(params[i], "decoupled_outer_round");
  }
  return stats;
}

OuterRoundStats demo_step(ParamSet& params, const ParamSet& grads, OuterState& state, Collective& sync,
                          std::uint32_t round, double lr) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.residual.size() != n) throw ShapeError("demo_step: tensor count mismatch");
  const double beta = state.config.beta;
  for (std::size_t i = 0; i < n; ++i) {
    require_same_shape(params[i], grads[i], "demo_step");
    require_finite(grads[i], "demo_step gradient");
    auto& m = state.residual[i];
    for (std::int64_t j = 0; j < m.size(); ++j) m[j] = static_cast<float>(beta * m[j] + static_cast<double>(grads[i][j]));
  }

  OuterRoundStats stats;
  const ParamSet shared = drain_and_synchronize(state, sync, round, stats);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < params[i].size(); ++j) {
      params[i][j] = static_cast<float>(static_cast<double>(params[i][j]) - lr * shared[i][j]);
    }
    require_finite(params[i], "demo_step");
  }
  return stats;
}

}  // namespace dlcmd
