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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "dlcmd/compression.hpp"
#include "dlcmd/dct.hpp"
#include "dlcmd/local_collective.hpp"
#include "dlcmd/metrics_io.hpp"
#include "dlcmd/report.hpp"
#include "dlcmd/tcp_collective.hpp"
#include "dlcmd/trainer.hpp"
#include "fd_check.hpp"
#include "oracles.hpp"

namespace dlcmd {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Orthonormality, energy and round trip of the chunk transform.
Outcome dct_correctness() {
  const auto start = Clock::now();
  const std::vector<Shape> shapes = {{8}, {4, 4}, {8, 8}, {3, 5}, {2, 3, 4}, {16, 16}, {7}};
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal;
  double ortho = 0, energy = 0, round_trip = 0;
  for (const auto& shape : shapes) {
    const auto plan = plan_for(shape);
    const auto v = plan->volume();
    Eigen::MatrixXd m(v, v);
    for (std::int64_t j = 0; j < v; ++j) m.col(j) = dct_forward(Eigen::VectorXd::Unit(v, j), *plan);
    const Eigen::MatrixXd gram = m.transpose() * m - Eigen::MatrixXd::Identity(v, v);
    ortho = std::max(ortho, gram.cwiseAbs().maxCoeff());
  }
  for (int c = 0; c < 1000; ++c) {
    const auto plan = plan_for(shapes[static_cast<std::size_t>(c) % shapes.size()]);
    Eigen::VectorXd x(plan->volume());
    for (auto& e : x) e = normal(gen);
    const Eigen::VectorXd y = dct_forward(x, *plan);
    energy = std::max(energy, std::abs(y.squaredNorm() - x.squaredNorm()) / x.squaredNorm());
    round_trip = std::max(round_trip, (dct_inverse(y, *plan) - x).norm() / x.norm());
  }
  const double elapsed = seconds_since(start);
  return {ortho <= 1e-6 && energy <= 1e-5 && round_trip <= 1e-5 && elapsed < 10,
          "1000 chunks over " + std::to_string(shapes.size()) + " shapes; orthonormality " + num(ortho) + ", energy " +
              num(energy) + ", round trip " + num(round_trip) + ", " + num(elapsed) + " s"};
}

DenseTensor random_block(std::mt19937_64& gen, const Shape& shape) { return oracle::random_tensor(gen, shape); }

// Squared reconstruction error of keeping `keep` coefficients, from an
// independent direct-sum transform.
double subset_error(const std::vector<double>& coeffs, const std::vector<bool>& keep) {
  double e = 0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (!keep[i]) e += coeffs[i] * coeffs[i];
  }
  return e;
}

double selection_error(const DenseTensor& x, const DenseTensor& reconstruction) {
  double e = 0;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double d = double(x[i]) - double(reconstruction[i]);
    e += d * d;
  }
  return e;
}

std::vector<double> as_doubles(const DenseTensor& t) {
  std::vector<double> out(static_cast<std::size_t>(t.size()));
  for (std::int64_t i = 0; i < t.size(); ++i) out[static_cast<std::size_t>(i)] = t[i];
  return out;
}

Outcome topk_optimality() {
  const auto start = Clock::now();
  std::mt19937_64 gen(2);
  const std::vector<Shape> small = {{4}, {8}, {2, 2}, {2, 4}, {3, 3}, {3, 5}, {16}, {4, 4}, {2, 8}};
  int cases = 0;
  double worst = 0;  // excess of the library's error over the best subset
  for (const auto& shape : small) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto x = random_block(gen, shape);
      const ChunkGrid grid(shape, shape);
      const auto v = grid.chunk_volume();
      const auto coeffs = oracle::dct_direct(as_doubles(x), shape);
      for (std::int64_t k = 1; k <= v; ++k) {
        const double ours = selection_error(x, extract_top_k(x, grid, k).reconstruction);
        // Enumerate every k-subset.
        std::vector<bool> keep(static_cast<std::size_t>(v), false);
        std::fill(keep.end() - k, keep.end(), true);
        double best = std::numeric_limits<double>::infinity();
        do {
          best = std::min(best, subset_error(coeffs, keep));
        } while (std::next_permutation(keep.begin(), keep.end()));
        // Excess relative to the block energy; the reconstruction is float.
        worst = std::max(worst, (ours - best) / selection_error(x, DenseTensor(shape)));
        ++cases;
      }
    }
  }
  int beaten = 0, large = 0;
  for (const Shape& shape : {Shape{64}, Shape{8, 8}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto x = random_block(gen, shape);
      const ChunkGrid grid(shape, shape);
      const auto coeffs = oracle::dct_direct(as_doubles(x), shape);
      for (std::int64_t k : {1, 4, 8, 16, 32}) {
        const double ours = selection_error(x, extract_top_k(x, grid, k).reconstruction);
        std::vector<std::size_t> idx(64);
        std::iota(idx.begin(), idx.end(), 0);
        for (int r = 0; r < 100; ++r) {
          std::shuffle(idx.begin(), idx.end(), gen);
          std::vector<bool> keep(64, false);
          for (std::int64_t j = 0; j < k; ++j) keep[idx[static_cast<std::size_t>(j)]] = true;
          ++large;
          if (ours <= subset_error(coeffs, keep) + 1e-6) ++beaten;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-6 && beaten == large && elapsed < 30,
          std::to_string(cases) + " exhaustive cases (V <= 16), worst excess over energy " + num(worst) + "; V = 64 beat " +
              std::to_string(beaten) + "/" + std::to_string(large) + " random subsets; " + num(elapsed) + " s"};
}

Outcome error_feedback() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> edge(1, 8);
  double worst = 0;
  for (int c = 0; c < 500; ++c) {
    const Shape chunk = c % 2 == 0 ? Shape{edge(gen), edge(gen)} : Shape{edge(gen) * 4};
    const Shape tensor = chunk.size() == 2 ? Shape{chunk[0] * 2, chunk[1] * 3} : Shape{chunk[0] * 2};
    const ChunkGrid grid(tensor, chunk);
    const auto x = random_block(gen, tensor);
    const auto k = std::uniform_int_distribution<std::int64_t>(1, grid.chunk_volume())(gen);
    const auto e = extract_top_k(x, grid, k);
    const auto residual = subtract_selected(x, e.selected);
    const auto kk = std::min(k, grid.chunk_volume());
    for (std::int64_t ch = 0; ch < grid.chunk_count(); ++ch) {
      std::vector<double> block(static_cast<std::size_t>(grid.chunk_volume()));
      gather_chunk(residual, grid, ch, block);
      const auto coeffs = oracle::dct_direct(block, chunk);
      for (std::int64_t j = 0; j < kk; ++j) {
        const auto index = e.selected.indices[static_cast<std::size_t>(ch * kk + j)];
        worst = std::max(worst, std::abs(coeffs[index]));
      }
    }
  }
  return {worst <= 1e-6, "500 cases; max |DCT(residual)| at selected indices " + num(worst)};
}

RunConfig base(const std::string& text) {
  RunConfig c = parse_config(text);
  return c;
}

Outcome equivalences() {
  const auto start = Clock::now();
  std::vector<std::string> notes;
  bool ok = true;

  // (a) Full training runs, identical data stream and inner steps.
  {
    auto c = base(
        "algo = dlc-md\nworkers = 1\nouter_steps = 50\ninner_steps = 4\nbatch = 16\ndataset_size = 512\n"
        "hidden = 16\nchunk = 8\ntopk = 64\nalpha = 1\nbeta = 0.9\nouter_lr = 0.7\ninner_lr = 0.01\n");
    auto ref = c;
    ref.algo = Algorithm::diloco;
    const auto data = prepare_dataset(c);
    const auto a = run_experiment(c, data);
    const auto b = run_experiment(ref, data);
    const double d = oracle::relative_distance(a.workers[0].params, b.workers[0].params);
    ok &= d <= 1e-6;
    notes.push_back("(a) " + num(d));
  }

  // (b) One step from a random momentum against the heavy-ball recurrence.
  {
    std::mt19937_64 gen(4);
    auto group = make_local_group(1);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
      ParamSet params{oracle::random_tensor(gen, {8, 12}), oracle::random_tensor(gen, {12})};
      const auto grids = chunk_grids(params, 4);
      const double beta = 0.9, lr = 0.05;
      OuterState state(params, grids, OuterConfig{beta, 0.5, 0.7, 16});
      for (auto& m : state.residual) m = oracle::random_tensor(gen, m.shape());
      ParamSet velocity = state.residual;
      ParamSet grads{oracle::random_tensor(gen, {8, 12}), oracle::random_tensor(gen, {12})};
      ParamSet expected = params;
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::int64_t j = 0; j < params[i].size(); ++j) {
          const double v = beta * double(velocity[i][j]) + double(grads[i][j]);
          expected[i][j] = static_cast<float>(double(params[i][j]) - lr * v);
        }
      }
      demo_step(params, grads, state, *group.members[0], static_cast<std::uint32_t>(trial + 1), lr);
      worst = std::max(worst, oracle::relative_distance(params, expected));
    }
    ok &= worst <= 1e-6;
    notes.push_back("(b) " + num(worst));
  }

  // (c) Two workers splitting each global batch against one worker taking it whole.
  {
    auto c = base(
        "algo = ddp\nworkers = 2\nouter_steps = 100\nbatch = 16\ndataset_size = 512\nhidden = 16\n"
        "shard_mode = replicated\ninner_lr = 0.01\n");
    auto ref = c;
    ref.workers = 1;
    ref.batch = 32;
    const auto data = prepare_dataset(c);
    const auto a = run_experiment(c, data);
    const auto b = run_experiment(ref, data);
    double d = 0;
    for (const auto& w : a.workers) d = std::max(d, oracle::relative_distance(w.params, b.workers[0].params));
    ok &= d <= 1e-5;
    notes.push_back("(c) " + num(d));
  }
  const double elapsed = seconds_since(start);
  ok &= elapsed < 120;
  return {ok, "relative distances " + notes[0] + ", " + notes[1] + ", " + notes[2] + "; " + num(elapsed) + " s"};
}

Outcome replica_consistency() {
  std::string detail;
  bool ok = true;
  for (int w : {2, 4}) {
    auto c = base("algo = dlc-md\nalpha = 0\nouter_steps = 20\ninner_steps = 4\nbatch = 16\nchunk = 8\ntopk = 8\n");
    c.workers = w;
    const auto data = prepare_dataset(c);
    const auto r = run_experiment(c, data);
    double worst = 0;
    for (const auto& m : r.metrics) worst = std::max(worst, m.drift);
    for (const auto& worker : r.workers) ok &= worker.params == r.workers[0].params;
    ok &= worst == 0.0 && r.metrics.size() == 20;
    detail += (detail.empty() ? "" : ", ") + std::string("W=") + std::to_string(w) + " max drift " + num(worst);
  }
  return {ok, detail + " over 20 rounds"};
}

Outcome gradient_checks() {
  std::mt19937_64 gen(6);
  bool ok = true;
  double worst = 0;
  std::string names;
  for (const auto& spec : testing::zoo()) {
    for (int point = 0; point < 3; ++point) {
      const auto params = testing::random_params(spec, gen);
      const auto batch = testing::random_batch(spec, 7, gen);
      const auto r = testing::finite_difference_check(spec, params, batch);
      ok &= r.passed;
      worst = std::max(worst, r.worst_relative);
    }
    names += (names.empty() ? "" : ", ") + to_string(spec.arch);
  }
  return {ok, "3 points each for " + names + "; worst relative error " + num(worst)};
}

// Independent of the library's size helpers: 8 header bytes per tensor plus
// 8 bytes per retained coefficient.
std::uint64_t expected_payload(const ParamSet& params, std::int64_t edge, std::int64_t k, std::uint64_t& coefficients) {
  std::uint64_t total = 0;
  coefficients = 0;
  for (const auto& p : params) {
    std::uint64_t chunks = 1, volume = 1;
    for (auto n : p.shape()) {
      std::int64_t d = std::min(n, edge);
      while (n % d != 0) --d;
      chunks *= static_cast<std::uint64_t>(n / d);
      volume *= static_cast<std::uint64_t>(d);
    }
    const auto kept = chunks * std::min<std::uint64_t>(volume, static_cast<std::uint64_t>(k));
    coefficients += kept;
    total += 8 + 8 * kept;
  }
  return total;
}

Outcome metering() {
  auto c = base(
      "workers = 3\nouter_steps = 3\ninner_steps = 2\nbatch = 8\nhidden = 100,100\nchunk = 64\ntopk = 64\n"
      "dataset_size = 256\n");
  const auto data = prepare_dataset(c);
  const auto params = init_model(model_spec(c), c.seed).params;
  std::uint64_t p = 0;
  for (const auto& t : params) p += static_cast<std::uint64_t>(t.size());
  std::uint64_t coefficients = 0;
  const auto compressed = expected_payload(params, c.chunk, c.topk, coefficients);
  const std::uint64_t links = static_cast<std::uint64_t>(c.workers * (c.workers - 1));

  bool ok = p >= 10000;
  std::map<Algorithm, std::uint64_t> bytes;
  for (auto algo : {Algorithm::ddp, Algorithm::diloco, Algorithm::dlc_md}) {
    auto cfg = c;
    cfg.algo = algo;
    validate(cfg);
    const auto r = run_experiment(cfg, data);
    const std::uint64_t per_round = algo == Algorithm::dlc_md ? compressed : 4 * p;
    for (const auto& m : r.metrics) {
      const auto expected = static_cast<std::uint64_t>(m.round) * links * per_round;
      ok &= m.bytes_sent == expected && m.bytes_recv == expected;
    }
    bytes[algo] = r.metrics.back().bytes_sent;
  }
  const double measured = double(bytes[Algorithm::diloco]) / double(bytes[Algorithm::dlc_md]);
  const double formula = 4.0 * double(p) / (8.0 * double(coefficients));
  const double slack = std::abs(measured - formula) / formula;
  ok &= slack < 0.01;
  return {ok, "P = " + std::to_string(p) + ", exact for ddp/diloco/dlc-md; diloco:dlc-md " + num(measured) +
                  " vs 4P/(8Ck) " + num(formula) + " (slack " + num(100 * slack) + "%)"};
}

double eval_accuracy(const RunConfig& c, const Dataset& data, const ParamSet& params) {
  return accuracy(model_spec(c), params, make_batch(data, data.eval));
}

Outcome convergence() {
  bool ok = true;
  std::string detail;

  {
    const auto start = Clock::now();
    auto c = base(
        "algo = dlc-md\nmodel = quadratic\nfeature_dim = 16\nworkers = 2\ninner_steps = 4\nouter_steps = 100\n"
        "chunk = 4\ntopk = 4\nbatch = 32\ndataset_size = 1024\ninner_lr = 0.05\nweight_decay = 0\n");
    const auto data = prepare_dataset(c);
    const double loss = run_experiment(c, data).metrics.back().eval_loss;
    const double elapsed = seconds_since(start);
    ok &= loss <= 1e-3 && elapsed < 300;
    detail += "(a) quadratic loss " + num(loss) + " in " + num(elapsed) + " s";
  }
  {
    const auto start = Clock::now();
    double worst = 1;
    std::int64_t slowest = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
      auto c = base(
          "algo = dlc-md\nmodel = mlp\nhidden = 32,32\nworkers = 4\ninner_steps = 8\nouter_steps = 60\nchunk = 8\n"
          "topk = 8\nbatch = 16\ndataset_size = 2048\ninner_lr = 0.01\n");
      c.seed = seed;
      const auto data = prepare_dataset(c);
      const auto r = run_experiment(c, data);
      const double acc = eval_accuracy(c, data, r.workers[0].params);
      worst = std::min(worst, acc);
      slowest = std::max(slowest, r.metrics.back().round);
    }
    const double elapsed = seconds_since(start);
    ok &= worst >= 0.95 && elapsed < 300;
    detail += "; (b) blobs worst accuracy over 3 seeds " + num(worst) + " after 60 rounds in " + num(elapsed) + " s";
  }
  {
    const auto start = Clock::now();
    auto c = base(
        "algo = dlc-md\nmodel = char-lm\nvocab = 16\ncontext = 8\nhidden = 32\nworkers = 2\ninner_steps = 8\n"
        "outer_steps = 100\nchunk = 8\ntopk = 8\nbatch = 32\ndataset_size = 16384\ninner_lr = 0.01\n");
    const auto data = prepare_dataset(c);
    const auto r = run_experiment(c, data);
    std::int64_t first = -1;
    for (const auto& m : r.metrics) {
      if (first < 0 && m.perplexity < 0.8 * double(c.vocab)) first = m.round;
    }
    const double elapsed = seconds_since(start);
    ok &= first > 0 && elapsed < 300;
    detail += "; (c) char-lm perplexity " + num(r.metrics.back().perplexity) + " (uniform " + std::to_string(c.vocab) +
              "), below 0.8x at round " + std::to_string(first) + " in " + num(elapsed) + " s";
  }
  return {ok, detail};
}

Outcome topk_sweep() {
  const std::int64_t volume = 64;  // chunk edge 8
  const std::vector<std::int64_t> ks = {volume / 16, volume / 8, volume / 4};
  std::vector<NamedRun> runs;
  std::vector<double> mean_loss(ks.size(), 0.0);
  std::vector<std::uint64_t> bytes(ks.size(), 0);
  bool ok = true;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::uint64_t seed : {1, 2, 3}) {
      auto c = base(
          "algo = dlc-md\nmodel = mlp\nhidden = 32,32\nworkers = 4\ninner_steps = 8\nouter_steps = 60\nchunk = 8\n"
          "batch = 16\ndataset_size = 2048\ninner_lr = 0.003\neval_interval = 60\n");
      c.topk = ks[i];
      c.seed = seed;
      c.label = "k=" + std::to_string(ks[i]) + " seed=" + std::to_string(seed);
      validate(c);
      const auto data = prepare_dataset(c);
      const auto r = run_experiment(c, data);
      mean_loss[i] += r.metrics.back().eval_loss / 3.0;
      if (seed == 1) bytes[i] = r.metrics.back().bytes_sent;
      ok &= r.metrics.back().bytes_sent == bytes[i];
      runs.push_back({c.label, MetricsFile{c, r.metrics}});
    }
  }
  for (std::size_t i = 1; i < ks.size(); ++i) ok &= bytes[i] > bytes[i - 1];
  const auto [lo, hi] = std::minmax_element(mean_loss.begin(), mean_loss.end());
  const double band = (*hi - *lo) / *lo;
  ok &= band <= 0.05;

  const std::string table = comparison_csv(runs);
  const fs::path out = fs::temp_directory_path() / "dlcmd_acceptance_sweep.csv";
  std::ofstream(out) << table;
  ok &= table.find("k=4 seed=1,k=16 seed=1,") != std::string::npos;

  std::string detail = "bytes";
  for (std::size_t i = 0; i < ks.size(); ++i) detail += " k=" + std::to_string(ks[i]) + ":" + std::to_string(bytes[i]);
  detail += "; mean final eval loss";
  for (std::size_t i = 0; i < ks.size(); ++i) detail += " " + num(mean_loss[i]);
  detail += " (band " + num(100 * band) + "%); table " + out.string();
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint16_t free_port() {
  TcpListener probe(PeerAddress{"127.0.0.1", 0});
  return probe.port();
}

Outcome backend_equivalence() {
  const fs::path root = fs::temp_directory_path() / "dlcmd_acceptance_backends";
  fs::remove_all(root);
  const std::vector<std::string> common = {"run",           "--algo",       "dlc-md", "--workers",     "2",
                                           "--outer-steps", "20",           "--inner-steps", "4",      "--chunk",
                                           "8",             "--topk",       "8",      "--eval-interval", "2"};
  std::ostringstream sink;
  auto local = common;
  local.insert(local.end(), {"--out", (root / "local").string()});
  if (run_cli(local, sink, sink) != kExitOk) return {false, "local run failed: " + sink.str()};

  const std::string peers =
      "0=127.0.0.1:" + std::to_string(free_port()) + ",1=127.0.0.1:" + std::to_string(free_port());
  int codes[2] = {-1, -1};
  std::ostringstream logs[2];
  auto rank_body = [&](int rank) {
    auto args = common;
    args.insert(args.end(), {"--backend", "tcp", "--rank", std::to_string(rank), "--peers", peers, "--out",
                             (root / ("tcp" + std::to_string(rank))).string()});
    codes[rank] = run_cli(args, logs[rank], logs[rank]);
  };
  std::thread other(rank_body, 1);
  rank_body(0);
  other.join();
  if (codes[0] != kExitOk || codes[1] != kExitOk) return {false, "tcp run failed: " + logs[0].str() + logs[1].str()};

  const auto a = slurp(root / "local" / "metrics.csv");
  const auto b = slurp(root / "tcp0" / "metrics.csv");
  const bool same = !a.empty() && a == b;
  const bool ckpt = slurp(root / "local" / "checkpoint-rank1.bin") == slurp(root / "tcp1" / "checkpoint-rank1.bin");
  fs::remove_all(root);
  return {same && ckpt, std::to_string(a.size()) + "-byte metrics files " + (same ? "identical" : "differ") +
                            ", rank 1 checkpoints " + (ckpt ? "identical" : "differ")};
}

}  // namespace
}  // namespace dlcmd

int main() {
  using dlcmd::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 transform correctness", dlcmd::dct_correctness},
      {"2 top-k optimality", dlcmd::topk_optimality},
      {"3 error-feedback invariant", dlcmd::error_feedback},
      {"4 equivalence oracles", dlcmd::equivalences},
      {"5 replica consistency", dlcmd::replica_consistency},
      {"6 gradient checks", dlcmd::gradient_checks},
      {"7 communication metering", dlcmd::metering},
      {"8 desk-scale convergence", dlcmd::convergence},
      {"9 top-k sweep", dlcmd::topk_sweep},
      {"10 backend equivalence", dlcmd::backend_equivalence},
  };
  int failed = 0;
  for (const auto& [name, body] : criteria) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.passed ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    if (!o.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
