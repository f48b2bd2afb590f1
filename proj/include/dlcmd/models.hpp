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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dlcmd/tensor.hpp"

namespace dlcmd {

enum class Architecture { quadratic, logistic, mlp, char_lm };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& name);

struct ModelSpec {
  Architecture arch = Architecture::mlp;
  std::int64_t input_dim = 2;  // feature width; ignored by char-lm
  std::vector<std::int64_t> hidden = {16};
  std::int64_t classes = 2;  // mlp output width
  std::int64_t vocab = 16;
  std::int64_t context = 8;

  // Width of the rows a Batch must carry (one-hot windows for char-lm).
  std::int64_t network_input() const;
};

struct Model {
  ModelSpec spec;
  std::vector<std::string> names;
  ParamSet params;

  std::int64_t parameter_count() const;
};

// Weights ~ N(0, 1/fan_in), biases zero; quadratic and logistic start at zero.
Model init_model(const ModelSpec& spec, std::uint64_t seed);

std::vector<Shape> parameter_shapes(const ModelSpec& spec);

struct Batch {
  Eigen::MatrixXf inputs;            // one example per row
  Eigen::VectorXf targets;           // quadratic regression targets
  std::vector<std::int32_t> labels;  // class ids (0/1 for logistic)

  std::int64_t size() const { return inputs.rows(); }
};

template <typename Scalar>
using Params = std::vector<BasicTensor<Scalar>>;

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  Params<Scalar> grads;
};

// Mean loss over the batch: half squared residual for quadratic, mean
// cross-entropy otherwise.
template <typename Scalar>
Scalar forward_loss(const ModelSpec& spec, const Params<Scalar>& params, const Batch& batch);

template <typename Scalar>
LossAndGrad<Scalar> backward(const ModelSpec& spec, const Params<Scalar>& params, const Batch& batch);

// Training entry point: evaluates in double and rounds gradients to float.
LossAndGrad<float> compute_gradients(const ModelSpec& spec, const ParamSet& params, const Batch& batch);
double evaluate_loss(const ModelSpec& spec, const ParamSet& params, const Batch& batch);

// Fraction of correctly classified examples; not defined for quadratic.
double accuracy(const ModelSpec& spec, const ParamSet& params, const Batch& batch);

double perplexity(double mean_cross_entropy);

bool is_cross_entropy(Architecture arch);

}  // namespace dlcmd
