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

#include "dlcmd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "dlcmd/local_collective.hpp"

namespace dlcmd {

namespace {

BatchSampler make_sampler(const RunConfig& config, int rank, const Dataset& data) {
  if (static_cast<std::int64_t>(data.train.size()) < config.batch * config.workers) {
    throw std::invalid_argument("training split has " + std::to_string(data.train.size()) +
                                " examples, fewer than workers * batch");
  }
  if (config.shard_mode == ShardMode::replicated) {
    // Every worker sees the full split in the same order and takes its slice
    // of each global batch.
    return BatchSampler(data.train, config.seed, 0, config.batch, rank, config.workers);
  }
  auto shards = shard(data, config.workers, config.seed);
  return BatchSampler(std::move(shards[static_cast<std::size_t>(rank)].indices), config.seed,
                      static_cast<std::uint64_t>(rank) + 1, config.batch);
}

Model make_model(const RunConfig& config, const Dataset& data) {
  const ModelSpec spec = model_spec(config);
  check_compatible(spec, data);
  return init_model(spec, config.seed);
}

ParamSet zeros_like(const ParamSet& params) {
  ParamSet out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.shape());
  return out;
}

OuterConfig outer_config(const RunConfig& c) { return OuterConfig{c.beta, c.alpha, c.outer_lr, c.topk}; }

struct Report {
  double train_loss;
  std::uint64_t sent;
  std::uint64_t recv;
  ParamSet params;
};

Bytes encode_report(double train_loss, const CommMeter& meter, const ParamSet& params) {
  Bytes out;
  ByteWriter w(out);
  w.put_f64(train_loss);
  w.put<std::uint64_t>(meter.bytes_sent());
  w.put<std::uint64_t>(meter.bytes_received());
  for (const auto& p : params) {
    for (std::int64_t i = 0; i < p.size(); ++i) w.put_f32(p[i]);
  }
  return out;
}

Report decode_report(const Bytes& bytes, const ParamSet& like, int peer) {
  try {
    ByteReader r(bytes);
    Report rep{r.get_f64(), r.get<std::uint64_t>(), r.get<std::uint64_t>(), zeros_like(like)};
    for (auto& p : rep.params) {
      for (std::int64_t i = 0; i < p.size(); ++i) p[i] = r.get_f32();
    }
    if (r.remaining() != 0) throw DecodeError("trailing bytes");
    return rep;
  } catch (const DecodeError& e) {
    throw MalformedFrameError("metrics report from rank " + std::to_string(peer) + ": " + e.what(), peer);
  }
}

}  // namespace

std::vector<ChunkGrid> chunk_grids(const ParamSet& params, std::int64_t edge) {
  std::vector<ChunkGrid> grids;
  grids.reserve(params.size());
  for (const auto& p : params) grids.push_back(ChunkGrid::for_tensor(p.shape(), edge));
  return grids;
}

double replica_drift(std::span<const ParamSet> replicas) {
  double worst = 0.0;
  for (std::size_t a = 0; a < replicas.size(); ++a) {
    for (std::size_t b = a + 1; b < replicas.size(); ++b) {
      if (replicas[a].size() != replicas[b].size()) throw ShapeError("replica_drift: replicas differ in tensor count");
      double total = 0.0;
      for (std::size_t i = 0; i < replicas[a].size(); ++i) total += l2_distance(replicas[a][i], replicas[b][i]);
      worst = std::max(worst, total);
    }
  }
  return worst;
}

Worker::Worker(const RunConfig& config, int rank, const Dataset& data)
    : config_(config),
      rank_(rank),
      data_(data),
      model_(make_model(config, data)),
      adam_(model_.params.size()),
      anchor_(model_.params),
      outer_(model_.params, chunk_grids(model_.params, config.chunk), outer_config(config)),
      outer_momentum_(zeros_like(model_.params)),
      sampler_(make_sampler(config, rank, data)) {
  for (std::size_t i = 0; i < adam_.size(); ++i) adam_[i] = AdamWState(model_.params[i].shape());
}

void Worker::set_anchor() { anchor_ = model_.params; }

AdamWConfig Worker::inner_config() const {
  AdamWConfig c{config_.inner_lr, config_.adam_beta1, config_.adam_beta2, config_.adam_eps, config_.weight_decay};
  if (config_.warmup_steps > 0) {
    c.lr *= std::min(1.0, static_cast<double>(steps_ + 1) / static_cast<double>(config_.warmup_steps));
  }
  return c;
}

LossAndGrad<float> Worker::next_gradient() {
  const auto indices = sampler_.next();
  const std::int64_t micro = config_.micro_batch > 0 ? config_.micro_batch : config_.batch;
  if (micro >= static_cast<std::int64_t>(indices.size())) {
    auto out = compute_gradients(model_.spec, model_.params, make_batch(data_, indices));
    if (!std::isfinite(out.loss)) throw NonFiniteError("non-finite training loss on rank " + std::to_string(rank_));
    return out;
  }

  // Accumulate micro-batch gradients weighted by their share of the batch.
  const double total = static_cast<double>(indices.size());
  double loss = 0.0;
  std::vector<std::vector<double>> acc;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(micro)) {
    const auto len = std::min<std::size_t>(static_cast<std::size_t>(micro), indices.size() - start);
    const auto part = compute_gradients(model_.spec, model_.params,
                                        make_batch(data_, std::span(indices).subspan(start, len)));
    const double weight = static_cast<double>(len) / total;
    loss += weight * part.loss;
    if (acc.empty()) {
      for (const auto& g : part.grads) acc.emplace_back(static_cast<std::size_t>(g.size()), 0.0);
    }
    for (std::size_t t = 0; t < part.grads.size(); ++t) {
      for (std::int64_t j = 0; j < part.grads[t].size(); ++j) acc[t][static_cast<std::size_t>(j)] += weight * part.grads[t][j];
    }
  }
  LossAndGrad<float> out{static_cast<float>(loss), {}};
  for (std::size_t t = 0; t < acc.size(); ++t) {
    DenseTensor g(model_.params[t].shape());
    for (std::int64_t j = 0; j < g.size(); ++j) g[j] = static_cast<float>(acc[t][static_cast<std::size_t>(j)]);
    out.grads.push_back(std::move(g));
  }
  if (!std::isfinite(out.loss)) throw NonFiniteError("non-finite training loss on rank " + std::to_string(rank_));
  return out;
}

double Worker::run_inner_phase(std::int64_t steps) {
  double total = 0.0;
  for (std::int64_t h = 0; h < steps; ++h) {
    const auto lg = next_gradient();
    const auto cfg = inner_config();
    for (std::size_t i = 0; i < model_.params.size(); ++i) adamw_step(model_.params[i], lg.grads[i], adam_[i], cfg);
    total += lg.loss;
    ++steps_;
  }
  return steps > 0 ? total / static_cast<double>(steps) : 0.0;
}

double run_round(Worker& w, const RunConfig& config, Collective& sync, std::uint32_t round) {
  auto& params = w.model_.params;
  switch (config.algo) {
    case Algorithm::ddp: {
      const auto lg = w.next_gradient();
      const auto cfg = w.inner_config();
      for (std::size_t i = 0; i < params.size(); ++i) {
        const DenseTensor mean = sync.dense_all_reduce(round, static_cast<std::uint16_t>(i), lg.grads[i]);
        adamw_step(params[i], mean, w.adam_[i], cfg);
      }
      ++w.steps_;
      return lg.loss;
    }
    case Algorithm::demo: {
      const auto lg = w.next_gradient();
      const double lr = w.inner_config().lr;
      demo_step(params, lg.grads, w.outer_, sync, round, lr);
      ++w.steps_;
      return lg.loss;
    }
    case Algorithm::diloco: {
      w.set_anchor();
      const double loss = w.run_inner_phase(config.inner_steps);
      for (std::size_t i = 0; i < params.size(); ++i) {
        DenseTensor local_delta(params[i].shape());
        for (std::int64_t j = 0; j < local_delta.size(); ++j) {
          local_delta[j] = static_cast<float>(static_cast<double>(w.anchor_[i][j]) - static_cast<double>(params[i][j]));
        }
        const DenseTensor delta = sync.dense_all_reduce(round, static_cast<std::uint16_t>(i), local_delta);
        params[i] = nesterov_outer(w.anchor_[i], delta, w.outer_momentum_[i], config.beta, config.outer_lr);
      }
      return loss;
    }
    case Algorithm::dlc_md: {
      w.set_anchor();
      const double loss = w.run_inner_phase(config.inner_steps);
      decoupled_outer_round(params, w.anchor_, w.outer_, sync, round);
      return loss;
    }
  }
  return 0.0;
}

WorkerResult run_worker(const RunConfig& config, const Dataset& data, Collective& sync, const MetricsSink& sink) {
  if (sync.world_size() != config.workers) {
    throw std::invalid_argument("collective has " + std::to_string(sync.world_size()) + " workers, config expects " +
                                std::to_string(config.workers));
  }
  const auto start = std::chrono::steady_clock::now();
  Worker worker(config, sync.rank(), data);
  const Batch eval_batch = make_batch(data, data.eval);
  const bool lead = sync.rank() == 0;

  WorkerResult result;
  result.rank = sync.rank();

  // Readiness barrier before the first round.
  sync.barrier(0);

  for (std::int64_t t = 1; t <= config.outer_steps; ++t) {
    const auto round = static_cast<std::uint32_t>(t);
    const double train_loss = run_round(worker, config, sync, round);
    if (t % config.eval_interval != 0 && t != config.outer_steps) continue;

    const auto reports = sync.gather_control(round, encode_report(train_loss, sync.meter(), worker.params()));
    if (!lead) continue;

    MetricsRecord rec;
    rec.round = t;
    rec.inner_steps = worker.steps_taken();
    std::vector<ParamSet> replicas;
    replicas.reserve(reports.size());
    double loss_sum = 0.0;
    for (std::size_t r = 0; r < reports.size(); ++r) {
      auto rep = decode_report(reports[r], worker.params(), static_cast<int>(r));
      loss_sum += rep.train_loss;
      rec.bytes_sent += rep.sent;
      rec.bytes_recv += rep.recv;
      replicas.push_back(std::move(rep.params));
    }
    rec.train_loss = loss_sum / static_cast<double>(reports.size());
    rec.drift = replica_drift(replicas);

    if (config.eval_mode == EvalMode::mean && replicas.size() > 1) {
      ParamSet mean = zeros_like(worker.params());
      for (std::size_t i = 0; i < mean.size(); ++i) {
        for (std::int64_t j = 0; j < mean[i].size(); ++j) {
          double s = 0.0;
          for (const auto& rep : replicas) s += rep[i][j];
          mean[i][j] = static_cast<float>(s / static_cast<double>(replicas.size()));
        }
      }
      rec.eval_loss = evaluate_loss(worker.spec(), mean, eval_batch);
    } else {
      rec.eval_loss = evaluate_loss(worker.spec(), worker.params(), eval_batch);
    }
    rec.perplexity = is_cross_entropy(worker.spec().arch) ? perplexity(rec.eval_loss)
                                                           : std::numeric_limits<double>::quiet_NaN();
    if (config.wall_clock) {
      rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    }
    result.metrics.push_back(rec);
    if (sink) sink(rec);
  }

  result.params = worker.params();
  result.meter = sync.meter();
  return result;
}

ExperimentResult run_experiment(const RunConfig& config, const Dataset& data, const MetricsSink& sink) {
  auto group = make_local_group(config.workers, std::chrono::milliseconds(static_cast<std::int64_t>(config.timeout * 1000)));
  ExperimentResult out;
  out.workers.resize(static_cast<std::size_t>(config.workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.workers));

  auto body = [&](int rank) {
    try {
      out.workers[static_cast<std::size_t>(rank)] =
          run_worker(config, data, *group.members[static_cast<std::size_t>(rank)], rank == 0 ? sink : MetricsSink{});
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(rank)] = std::current_exception();
      group.hub->abort("rank " + std::to_string(rank) + " failed: " + e.what());
    }
  };

  std::vector<std::thread> threads;
  for (int r = 1; r < config.workers; ++r) threads.emplace_back(body, r);
  body(0);
  for (auto& t : threads) t.join();

  // Prefer the root cause over the aborts it triggered in other workers.
  std::exception_ptr first_abort;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const CollectiveError& ce) {
      if (ce.peer() == -1 && std::string(ce.what()).rfind("collective aborted", 0) == 0) {
        if (!first_abort) first_abort = e;
        continue;
      }
      throw;
    }
  }
  if (first_abort) std::rethrow_exception(first_abort);

  out.metrics = out.workers.front().metrics;
  return out;
}

Dataset prepare_dataset(const RunConfig& config) {
  if (!config.dataset.empty()) return load_dataset(config.dataset);
  return generate(dataset_spec(config));
}

}  // namespace dlcmd
