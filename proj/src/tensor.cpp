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

#include "dlcmd/tensor.hpp"

#include <cmath>
#include <sstream>

namespace dlcmd {

std::int64_t shape_volume(const Shape& shape) {
  std::int64_t volume = 1;
  for (auto n : shape) {
    if (n <= 0) throw ShapeError("shape entries must be positive, got " + shape_string(shape));
    volume *= n;
  }
  return volume;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

double l2_distance(const DenseTensor& a, const DenseTensor& b) {
  require_same_shape(a, b, "l2_distance");
  double sum = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double l2_norm(const DenseTensor& a) {
  double sum = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * a[i];
  return std::sqrt(sum);
}

}  // namespace dlcmd
