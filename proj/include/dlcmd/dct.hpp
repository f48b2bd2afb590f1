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
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "dlcmd/tensor.hpp"

namespace dlcmd {

// Orthonormal DCT-II matrix: row m is the m-th basis vector, so the forward
// transform is M * x and the inverse (DCT-III) is M^T * c.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dct_matrix(std::int64_t n);

// Separable d-dimensional transform for one chunk shape. Immutable and
// shareable once built.
class DctPlan {
 public:
  explicit DctPlan(Shape chunk_shape);

  const Shape& chunk_shape() const { return chunk_shape_; }
  std::int64_t volume() const { return volume_; }
  const Eigen::MatrixXd& axis_matrix(std::size_t axis) const { return axis_[axis]; }

 private:
  Shape chunk_shape_;
  std::int64_t volume_;
  std::vector<Eigen::MatrixXd> axis_;
};

// Process-wide cache keyed by chunk shape.
std::shared_ptr<const DctPlan> plan_for(const Shape& chunk_shape);

// Row-major chunk in, row-major frequency coefficients out.
Eigen::VectorXd dct_forward(const Eigen::VectorXd& chunk, const DctPlan& plan);
Eigen::VectorXd dct_inverse(const Eigen::VectorXd& coeffs, const DctPlan& plan);

}  // namespace dlcmd
