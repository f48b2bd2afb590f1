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

#include "dlcmd/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <tuple>

#include "dlcmd/compression.hpp"
#include "dlcmd/dct.hpp"
#include "dlcmd/local_collective.hpp"
#include "dlcmd/optim.hpp"
#include "dlcmd/rng.hpp"

namespace dlcmd {

namespace {

const std::vector<Shape> kShapes = {{8}, {16}, {4, 4}, {8, 8}, {2, 3, 4}, {6, 5}};

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

Eigen::VectorXd random_vector(Rng& rng, std::int64_t n) {
  Eigen::VectorXd v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

DenseTensor random_tensor(Rng& rng, const Shape& shape) {
  DenseTensor t(shape);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.normal());
  return t;
}

SelftestCheck check(std::string suite, std::string name, double error, double bound) {
  return {std::move(suite), std::move(name), error <= bound, "max error " + sci(error) + " (bound " + sci(bound) + ")"};
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  double worst = 0;
  for (std::int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(double(a[i]) - double(b[i])));
  return worst;
}

void freq_transform(std::vector<SelftestCheck>& out, Rng& rng) {
  double ortho = 0;
  for (const auto& shape : kShapes) {
    const DctPlan plan(shape);
    for (std::size_t a = 0; a < shape.size(); ++a) {
      const auto& m = plan.axis_matrix(a);
      const Eigen::MatrixXd gram = m.transpose() * m - Eigen::MatrixXd::Identity(m.rows(), m.cols());
      ortho = std::max(ortho, gram.cwiseAbs().maxCoeff());
    }
  }
  out.push_back(check("freq-transform", "orthonormal basis", ortho, 1e-6));

  double parseval = 0;
  double round_trip = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& shape = kShapes[static_cast<std::size_t>(trial) % kShapes.size()];
    const auto plan = plan_for(shape);
    const Eigen::VectorXd x = random_vector(rng, plan->volume());
    const Eigen::VectorXd c = dct_forward(x, *plan);
    parseval = std::max(parseval, std::abs(c.squaredNorm() - x.squaredNorm()) / x.squaredNorm());
    round_trip = std::max(round_trip, (dct_inverse(c, *plan) - x).norm() / x.norm());
  }
  out.push_back(check("freq-transform", "energy preserved", parseval, 1e-5));
  out.push_back(check("freq-transform", "inverse round trip", round_trip, 1e-5));

  double feedback = 0;
  double full = 0;
  double ordering = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape tensor_shape = {8, 12};
    const auto grid = ChunkGrid::for_tensor(tensor_shape, 4);
    const DenseTensor m = random_tensor(rng, tensor_shape);
    const std::int64_t k = 1 + trial % grid.chunk_volume();
    const auto ex = extract_top_k(m, grid, k);
    const DenseTensor residual = subtract_selected(m, ex.selected);
    const auto plan = plan_for(grid.chunk_shape());
    for (std::int64_t c = 0; c < grid.chunk_count(); ++c) {
      Eigen::VectorXd chunk(grid.chunk_volume());
      gather_chunk(residual, grid, c, chunk);
      const Eigen::VectorXd coeffs = dct_forward(chunk, *plan);
      Eigen::VectorXd orig(grid.chunk_volume());
      gather_chunk(m, grid, c, orig);
      const Eigen::VectorXd orig_coeffs = dct_forward(orig, *plan);
      std::vector<bool> picked(static_cast<std::size_t>(grid.chunk_volume()), false);
      double smallest_kept = INFINITY;
      for (std::int64_t j = 0; j < k; ++j) {
        const auto idx = ex.selected.indices[static_cast<std::size_t>(c * k + j)];
        picked[idx] = true;
        feedback = std::max(feedback, std::abs(coeffs[idx]));
        smallest_kept = std::min(smallest_kept, std::abs(orig_coeffs[idx]));
      }
      for (std::int64_t i = 0; i < grid.chunk_volume(); ++i) {
        if (!picked[static_cast<std::size_t>(i)]) ordering = std::max(ordering, std::abs(orig_coeffs[i]) - smallest_kept);
      }
    }
    const auto all = extract_top_k(m, grid, grid.chunk_volume());
    full = std::max(full, max_abs_diff(reconstruct(all.selected), m));
  }
  out.push_back(check("freq-transform", "residual empty at selected frequencies", feedback, 1e-6));
  out.push_back(check("freq-transform", "no dropped amplitude exceeds a kept one", std::max(ordering, 0.0), 1e-6));
  out.push_back(check("freq-transform", "full selection reconstructs the input", full, 1e-5));
}

void optim(std::vector<SelftestCheck>& out, Rng& rng) {
  {
    // First AdamW step has unit-magnitude normalized direction.
    const AdamWConfig cfg{0.01, 0.9, 0.999, 1e-8, 0.1};
    DenseTensor p = random_tensor(rng, {32});
    const DenseTensor g = random_tensor(rng, {32});
    const DenseTensor before = p;
    AdamWState state({32});
    adamw_step(p, g, state, cfg);
    double err = 0;
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double expect = before[i] - cfg.lr * cfg.weight_decay * before[i] - cfg.lr * gi / (std::abs(gi) + cfg.eps);
      err = std::max(err, std::abs(expect - p[i]));
    }
    out.push_back(check("optim", "adamw first step", err, 1e-6));
  }
  {
    const DenseTensor anchor = random_tensor(rng, {16});
    const DenseTensor delta = random_tensor(rng, {16});
    DenseTensor mom({16});
    const DenseTensor next = nesterov_outer(anchor, delta, mom, 0.0, 1.0);
    out.push_back(check("optim", "nesterov without momentum subtracts delta", max_abs_diff(next, sub(anchor, delta)), 1e-6));
  }

  // Single worker, all frequencies kept: with alpha = 1 the decoupled round
  // is the Nesterov outer step, and with alpha = beta = 0 it is plain SGD.
  const Shape shape = {8, 8};
  const auto grid = ChunkGrid::for_tensor(shape, 4);
  for (const auto& [alpha, beta, name] :
       {std::tuple{1.0, 0.9, "single worker full k, alpha 1 matches nesterov"},
        std::tuple{0.0, 0.0, "single worker full k, alpha 0 and beta 0 matches sgd"}}) {
    auto group = make_local_group(1);
    const double lr = 0.7;
    ParamSet params = {random_tensor(rng, shape)};
    DenseTensor reference = params[0];
    DenseTensor mom(shape);
    OuterState state(params, {grid}, OuterConfig{beta, alpha, lr, grid.chunk_volume()});
    double err = 0;
    double norm = 0;
    for (std::uint32_t round = 1; round <= 20; ++round) {
      const ParamSet anchor = params;
      const DenseTensor step = scale(random_tensor(rng, shape), 0.1f);
      params[0] = sub(params[0], step);
      const DenseTensor ref_anchor = reference;
      const DenseTensor ref_local = sub(reference, step);
      decoupled_outer_round(params, anchor, state, *group.members[0], round);
      DenseTensor delta(shape);
      for (std::int64_t i = 0; i < delta.size(); ++i) delta[i] = static_cast<float>(double(ref_anchor[i]) - double(ref_local[i]));
      reference = nesterov_outer(ref_anchor, delta, mom, beta, lr);
      err = std::max(err, max_abs_diff(params[0], reference));
      norm = std::max(norm, l2_norm(reference));
      // Keep both trajectories on the same iterate so float rounding does not
      // accumulate into the comparison.
      params[0] = reference;
    }
    out.push_back(check("optim", name, err / std::max(norm, 1.0), 1e-6));
  }
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
  std::vector<SelftestCheck> out;
  Rng rng(seed, 7);
  const std::vector<std::pair<const char*, std::function<void(std::vector<SelftestCheck>&, Rng&)>>> suites = {
      {"freq-transform", freq_transform}, {"optim", optim}};
  for (const auto& [suite, run] : suites) {
    try {
      run(out, rng);
    } catch (const std::exception& e) {
      out.push_back({suite, "suite completed", false, e.what()});
    }
  }
  return out;
}

}  // namespace dlcmd
