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
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dlcmd {

using Shape = std::vector<std::int64_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::int64_t shape_volume(const Shape& shape);
std::string shape_string(const Shape& shape);

// Row-major dense tensor. The flat buffer is an Eigen column vector so the
// arithmetic below stays expression-friendly.
template <typename Scalar>
class BasicTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    data_ = Vector::Zero(shape_volume(shape_));
  }

  BasicTensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_volume(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  BasicTensor(Shape shape, std::initializer_list<Scalar> values)
      : BasicTensor(std::move(shape), Vector::Map(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

  static BasicTensor constant(Shape shape, Scalar value) {
    BasicTensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return data_.size(); }
  int rank() const { return static_cast<int>(shape_.size()); }

  Vector& values() { return data_; }
  const Vector& values() const { return data_; }

  std::span<Scalar> span() { return {data_.data(), static_cast<std::size_t>(data_.size())}; }
  std::span<const Scalar> span() const { return {data_.data(), static_cast<std::size_t>(data_.size())}; }

  Scalar& operator[](std::int64_t i) { return data_[i]; }
  Scalar operator[](std::int64_t i) const { return data_[i]; }

  template <typename Other>
  BasicTensor<Other> cast() const {
    return BasicTensor<Other>(shape_, data_.template cast<Other>());
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Vector data_;
};

using DenseTensor = BasicTensor<float>;
using ParamSet = std::vector<DenseTensor>;

template <typename Scalar>
bool all_finite(const BasicTensor<Scalar>& t) {
  return t.values().allFinite();
}

template <typename Scalar>
void require_finite(const BasicTensor<Scalar>& t, const std::string& what) {
  if (!all_finite(t)) throw NonFiniteError(what + ": non-finite value");
}

template <typename Scalar>
void require_same_shape(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Scalar>
BasicTensor<Scalar> add(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  require_same_shape(a, b, "add");
  BasicTensor<Scalar> out(a.shape(), a.values() + b.values());
  require_finite(out, "add");
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> sub(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  require_same_shape(a, b, "sub");
  BasicTensor<Scalar> out(a.shape(), a.values() - b.values());
  require_finite(out, "sub");
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> scale(const BasicTensor<Scalar>& a, Scalar s) {
  BasicTensor<Scalar> out(a.shape(), a.values() * s);
  require_finite(out, "scale");
  return out;
}

// alpha * x + y
template <typename Scalar>
BasicTensor<Scalar> axpy(Scalar alpha, const BasicTensor<Scalar>& x, const BasicTensor<Scalar>& y) {
  require_same_shape(x, y, "axpy");
  BasicTensor<Scalar> out(x.shape(), (alpha * x.values()) + y.values());
  require_finite(out, "axpy");
  return out;
}

// Euclidean norm of a - b, accumulated in double.
double l2_distance(const DenseTensor& a, const DenseTensor& b);
double l2_norm(const DenseTensor& a);

}  // namespace dlcmd
