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

#include "dlcmd/dct.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace dlcmd {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dct_matrix(std::int64_t n) {
  if (n <= 0) throw ShapeError("dct_matrix: size must be positive");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  const double dc = std::sqrt(1.0 / static_cast<double>(n));
  const double ac = std::sqrt(2.0 / static_cast<double>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    for (std::int64_t i = 0; i < n; ++i) {
      const double angle = std::numbers::pi * static_cast<double>((2 * i + 1) * k) / static_cast<double>(2 * n);
      m(k, i) = static_cast<Scalar>((k == 0 ? dc : ac) * std::cos(angle));
    }
  }
  return m;
}

template Eigen::MatrixXd dct_matrix<double>(std::int64_t);
template Eigen::MatrixXf dct_matrix<float>(std::int64_t);

DctPlan::DctPlan(Shape chunk_shape) : chunk_shape_(std::move(chunk_shape)), volume_(shape_volume(chunk_shape_)) {
  axis_.reserve(chunk_shape_.size());
  for (auto n : chunk_shape_) axis_.push_back(dct_matrix<double>(n));
}

std::shared_ptr<const DctPlan> plan_for(const Shape& chunk_shape) {
  static std::mutex mu;
  static std::map<Shape, std::shared_ptr<const DctPlan>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[chunk_shape];
  if (!slot) slot = std::make_shared<const DctPlan>(chunk_shape);
  return slot;
}

namespace {

// Applies M (or M^T) to every fiber along every axis in order.
Eigen::VectorXd transform(const Eigen::VectorXd& in, const DctPlan& plan, bool inverse) {
  if (in.size() != plan.volume()) {
    throw ShapeError("dct: chunk length " + std::to_string(in.size()) + " does not match plan volume " +
                     std::to_string(plan.volume()));
  }
  Eigen::VectorXd buf = in;
  const auto& shape = plan.chunk_shape();
  std::int64_t stride = plan.volume();
  Eigen::VectorXd fiber, mapped;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    const std::int64_t n = shape[a];
    stride /= n;
    const std::int64_t outer = plan.volume() / (n * stride);
    const Eigen::MatrixXd& m = plan.axis_matrix(a);
    fiber.resize(n);
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t i = 0; i < stride; ++i) {
        const std::int64_t base = o * n * stride + i;
        for (std::int64_t j = 0; j < n; ++j) fiber[j] = buf[base + j * stride];
        if (inverse) {
          mapped.noalias() = m.transpose() * fiber;
        } else {
          mapped.noalias() = m * fiber;
        }
        for (std::int64_t j = 0; j < n; ++j) buf[base + j * stride] = mapped[j];
      }
    }
  }
  return buf;
}

}  // namespace

Eigen::VectorXd dct_forward(const Eigen::VectorXd& chunk, const DctPlan& plan) { return transform(chunk, plan, false); }

Eigen::VectorXd dct_inverse(const Eigen::VectorXd& coeffs, const DctPlan& plan) { return transform(coeffs, plan, true); }

}  // namespace dlcmd
