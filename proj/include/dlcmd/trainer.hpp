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

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dlcmd/collective.hpp"
#include "dlcmd/config.hpp"
#include "dlcmd/datasets.hpp"
#include "dlcmd/models.hpp"
#include "dlcmd/optim.hpp"

namespace dlcmd {

struct MetricsRecord {
  std::int64_t round = 0;
  std::int64_t inner_steps = 0;  // cumulative per worker
  double train_loss = 0;         // mean over workers of the round's inner losses
  double eval_loss = 0;
  double perplexity = 0;  // exp(eval_loss); NaN for the quadratic model
  std::uint64_t bytes_sent = 0;  // summed over workers
  std::uint64_t bytes_recv = 0;
  double drift = 0;
  std::int64_t wall_ms = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

// Chunk grids of every parameter tensor for a configured chunk edge.
std::vector<ChunkGrid> chunk_grids(const ParamSet& params, std::int64_t edge);

// Sum over tensors of per-tensor L2 distance, maximized over replica pairs.
double replica_drift(std::span<const ParamSet> replicas);

// One replica and everything it owns privately.
class Worker {
 public:
  Worker(const RunConfig& config, int rank, const Dataset& data);

  int rank() const { return rank_; }
  const ModelSpec& spec() const { return model_.spec; }
  const Model& model() const { return model_; }
  ParamSet& params() { return model_.params; }
  const ParamSet& params() const { return model_.params; }
  const ParamSet& anchor() const { return anchor_; }
  const OuterState& outer() const { return outer_; }
  std::int64_t steps_taken() const { return steps_; }

  // Snapshot of the round-start parameters.
  void set_anchor();

  // `steps` AdamW updates on this worker's shard; returns the mean loss (0 for
  // no steps). No communication.
  double run_inner_phase(std::int64_t steps);

  // Loss and gradient of the next batch, with micro-batch accumulation.
  LossAndGrad<float> next_gradient();

  AdamWConfig inner_config() const;

  friend double run_round(Worker& worker, const RunConfig& config, Collective& sync, std::uint32_t round);

 private:
  const RunConfig& config_;
  int rank_;
  const Dataset& data_;
  Model model_;
  std::vector<AdamWState> adam_;
  ParamSet anchor_;
  OuterState outer_;
  ParamSet outer_momentum_;  // diloco
  BatchSampler sampler_;
  std::int64_t steps_ = 0;
};

// One outer round of the configured algorithm for this worker; returns the
// worker's mean training loss over the round.
double run_round(Worker& worker, const RunConfig& config, Collective& sync, std::uint32_t round);

struct WorkerResult {
  int rank = 0;
  ParamSet params;
  std::vector<MetricsRecord> metrics;  // populated on rank 0 only
  CommMeter meter;
};

// Full run for one worker. Every rank must call this with the same config
// and dataset. Rank 0 passes each record to `sink` as soon as it exists.
WorkerResult run_worker(const RunConfig& config, const Dataset& data, Collective& sync, const MetricsSink& sink = {});

struct ExperimentResult {
  std::vector<MetricsRecord> metrics;
  std::vector<WorkerResult> workers;  // by rank
};

// All workers in-process on the local backend.
ExperimentResult run_experiment(const RunConfig& config, const Dataset& data, const MetricsSink& sink = {});

// Loads `config.dataset` or generates one from the config.
Dataset prepare_dataset(const RunConfig& config);

}  // namespace dlcmd
