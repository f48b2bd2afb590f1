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

#include "dlcmd/models.hpp"

#include <cmath>
#include <stdexcept>

#include "dlcmd/rng.hpp"

namespace dlcmd {

namespace {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Eigen::Map<const RowMatrix<Scalar>> as_matrix(const BasicTensor<Scalar>& t) {
  return {t.values().data(), t.shape()[0], t.shape()[1]};
}

template <typename Scalar>
BasicTensor<Scalar> from_matrix(const Matrix<Scalar>& m) {
  BasicTensor<Scalar> t({m.rows(), m.cols()});
  Eigen::Map<RowMatrix<Scalar>>(t.values().data(), m.rows(), m.cols()) = m;
  return t;
}

std::vector<std::int64_t> layer_widths(const ModelSpec& spec) {
  std::vector<std::int64_t> widths{spec.network_input()};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.arch == Architecture::char_lm ? spec.vocab : spec.classes);
  return widths;
}

std::int64_t output_width(const ModelSpec& spec) {
  return spec.arch == Architecture::char_lm ? spec.vocab : spec.classes;
}

void validate(const ModelSpec& spec, std::size_t param_count, const Batch& batch) {
  if (batch.size() < 1) throw std::invalid_argument("batch is empty");
  if (batch.inputs.cols() != spec.network_input()) {
    throw ShapeError("batch rows have width " + std::to_string(batch.inputs.cols()) + ", model expects " +
                     std::to_string(spec.network_input()));
  }
  if (param_count != parameter_shapes(spec).size()) throw ShapeError("parameter count does not match architecture");
  if (spec.arch == Architecture::quadratic) {
    if (batch.targets.size() != batch.size()) throw ShapeError("quadratic batch needs one target per example");
    return;
  }
  if (static_cast<std::int64_t>(batch.labels.size()) != batch.size()) throw ShapeError("batch needs one label per example");
  const std::int64_t classes = spec.arch == Architecture::logistic ? 2 : output_width(spec);
  for (auto y : batch.labels) {
    if (y < 0 || y >= classes) throw std::out_of_range("label " + std::to_string(y) + " outside [0, " +
                                                       std::to_string(classes) + ")");
  }
}

// Stable log(1 + exp(z)).
template <typename Scalar>
Scalar softplus(Scalar z) {
  return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

// Activations of every layer for the tanh MLP; the last entry is the logits.
template <typename Scalar>
std::vector<Matrix<Scalar>> mlp_forward(const ModelSpec& spec, const Params<Scalar>& params, const Batch& batch) {
  const std::size_t layers = parameter_shapes(spec).size() / 2;
  std::vector<Matrix<Scalar>> acts;
  acts.reserve(layers + 1);
  acts.push_back(batch.inputs.cast<Scalar>());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto w = as_matrix(params[2 * l]);
    const auto& b = params[2 * l + 1].values();
    Matrix<Scalar> z = acts.back() * w.transpose();
    z.rowwise() += b.transpose();
    if (l + 1 < layers) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

// Mean cross-entropy; writes softmax(logits) - onehot into `dlogits` if given.
template <typename Scalar>
Scalar cross_entropy(const Matrix<Scalar>& logits, const std::vector<std::int32_t>& labels, Matrix<Scalar>* dlogits) {
  const auto n = logits.rows();
  Scalar total = 0;
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar max = logits.row(i).maxCoeff();
    const Scalar lse = max + std::log((logits.row(i).array() - max).exp().sum());
    total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
    if (dlogits) {
      dlogits->row(i) = (logits.row(i).array() - lse).exp().matrix();
      (*dlogits)(i, labels[static_cast<std::size_t>(i)]) -= Scalar(1);
    }
  }
  return total / static_cast<Scalar>(n);
}

}  // namespace

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::quadratic:
      return "quadratic";
    case Architecture::logistic:
      return "logistic";
    case Architecture::mlp:
      return "mlp";
    case Architecture::char_lm:
      return "char-lm";
  }
  return "unknown";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "quadratic") return Architecture::quadratic;
  if (name == "logistic") return Architecture::logistic;
  if (name == "mlp") return Architecture::mlp;
  if (name == "char-lm") return Architecture::char_lm;
  throw std::invalid_argument("unknown model '" + name + "' (expected quadratic, logistic, mlp or char-lm)");
}

bool is_cross_entropy(Architecture arch) { return arch != Architecture::quadratic; }

std::int64_t ModelSpec::network_input() const {
  return arch == Architecture::char_lm ? context * vocab : input_dim;
}

std::int64_t Model::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

std::vector<Shape> parameter_shapes(const ModelSpec& spec) {
  switch (spec.arch) {
    case Architecture::quadratic:
      return {{spec.input_dim}};
    case Architecture::logistic:
      return {{spec.input_dim}, {1}};
    case Architecture::mlp:
    case Architecture::char_lm: {
      if (spec.arch == Architecture::char_lm && spec.hidden.size() != 1) {
        throw std::invalid_argument("char-lm takes exactly one hidden layer");
      }
      const auto widths = layer_widths(spec);
      std::vector<Shape> shapes;
      for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        shapes.push_back({widths[l + 1], widths[l]});
        shapes.push_back({widths[l + 1]});
      }
      return shapes;
    }
  }
  return {};
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
  Model model{spec, {}, {}};
  Rng rng(seed, 0x6d6f64656cULL);
  const auto shapes = parameter_shapes(spec);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    DenseTensor t(shapes[i]);
    switch (spec.arch) {
      case Architecture::quadratic:
        model.names.push_back("theta");
        break;
      case Architecture::logistic:
        model.names.push_back(i == 0 ? "weight" : "bias");
        break;
      case Architecture::mlp:
      case Architecture::char_lm:
        model.names.push_back("layer" + std::to_string(i / 2) + (i % 2 == 0 ? ".weight" : ".bias"));
        if (i % 2 == 0) {
          const double stddev = 1.0 / std::sqrt(static_cast<double>(shapes[i][1]));
          for (std::int64_t j = 0; j < t.size(); ++j) t[j] = static_cast<float>(rng.normal(0.0, stddev));
        }
        break;
    }
    model.params.push_back(std::move(t));
  }
  return model;
}

template <typename Scalar>
Scalar forward_loss(const ModelSpec& spec, const Params<Scalar>& params, const Batch& batch) {
  validate(spec, params.size(), batch);
  const Scalar n = static_cast<Scalar>(batch.size());
  const Matrix<Scalar> x = batch.inputs.cast<Scalar>();
  switch (spec.arch) {
    case Architecture::quadratic: {
      const Vector<Scalar> r = x * params[0].values() - batch.targets.cast<Scalar>();
      return Scalar(0.5) * r.squaredNorm() / n;
    }
    case Architecture::logistic: {
      const Vector<Scalar> z = (x * params[0].values()).array() + params[1][0];
      Scalar total = 0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        total += softplus(z[i]) - static_cast<Scalar>(batch.labels[static_cast<std::size_t>(i)]) * z[i];
      }
      return total / n;
    }
    case Architecture::mlp:
    case Architecture::char_lm: {
      const auto acts = mlp_forward(spec, params, batch);
      return cross_entropy<Scalar>(acts.back(), batch.labels, nullptr);
    }
  }
  return Scalar(0);
}

template <typename Scalar>
LossAndGrad<Scalar> backward(const ModelSpec& spec, const Params<Scalar>& params, const Batch& batch) {
  validate(spec, params.size(), batch);
  const Scalar n = static_cast<Scalar>(batch.size());
  const Matrix<Scalar> x = batch.inputs.cast<Scalar>();
  LossAndGrad<Scalar> out{Scalar(0), {}};
  switch (spec.arch) {
    case Architecture::quadratic: {
      const Vector<Scalar> r = x * params[0].values() - batch.targets.cast<Scalar>();
      out.loss = Scalar(0.5) * r.squaredNorm() / n;
      out.grads.emplace_back(params[0].shape(), (x.transpose() * r) / n);
      break;
    }
    case Architecture::logistic: {
      const Vector<Scalar> z = (x * params[0].values()).array() + params[1][0];
      Vector<Scalar> dz(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const Scalar y = static_cast<Scalar>(batch.labels[static_cast<std::size_t>(i)]);
        out.loss += softplus(z[i]) - y * z[i];
        dz[i] = (sigmoid(z[i]) - y) / n;
      }
      out.loss /= n;
      out.grads.emplace_back(params[0].shape(), x.transpose() * dz);
      out.grads.push_back(BasicTensor<Scalar>({1}, {dz.sum()}));
      break;
    }
    case Architecture::mlp:
    case Architecture::char_lm: {
      const auto acts = mlp_forward(spec, params, batch);
      const std::size_t layers = acts.size() - 1;
      Matrix<Scalar> delta;
      out.loss = cross_entropy<Scalar>(acts.back(), batch.labels, &delta);
      delta /= n;
      out.grads.resize(2 * layers);
      for (std::size_t l = layers; l-- > 0;) {
        out.grads[2 * l] = from_matrix<Scalar>(delta.transpose() * acts[l]);
        out.grads[2 * l + 1] = BasicTensor<Scalar>({delta.cols()}, delta.colwise().sum().transpose());
        if (l > 0) {
          Matrix<Scalar> upstream = delta * as_matrix(params[2 * l]);
          delta = (upstream.array() * (Scalar(1) - acts[l].array().square())).matrix();
        }
      }
      break;
    }
  }
  for (const auto& g : out.grads) require_finite(g, "backward");
  if (!std::isfinite(out.loss)) throw NonFiniteError("backward: non-finite loss");
  return out;
}

template float forward_loss<float>(const ModelSpec&, const Params<float>&, const Batch&);
template double forward_loss<double>(const ModelSpec&, const Params<double>&, const Batch&);
template LossAndGrad<float> backward<float>(const ModelSpec&, const Params<float>&, const Batch&);
template LossAndGrad<double> backward<double>(const ModelSpec&, const Params<double>&, const Batch&);

namespace {

Params<double> widen(const ParamSet& params) {
  Params<double> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.cast<double>());
  return out;
}

}  // namespace

LossAndGrad<float> compute_gradients(const ModelSpec& spec, const ParamSet& params, const Batch& batch) {
  const auto wide = backward<double>(spec, widen(params), batch);
  LossAndGrad<float> out{static_cast<float>(wide.loss), {}};
  out.grads.reserve(wide.grads.size());
  for (const auto& g : wide.grads) out.grads.push_back(g.cast<float>());
  return out;
}

double evaluate_loss(const ModelSpec& spec, const ParamSet& params, const Batch& batch) {
  return forward_loss<double>(spec, widen(params), batch);
}

double accuracy(const ModelSpec& spec, const ParamSet& params, const Batch& batch) {
  if (spec.arch == Architecture::quadratic) throw std::invalid_argument("accuracy is undefined for the quadratic model");
  const auto wide = widen(params);
  validate(spec, wide.size(), batch);
  std::int64_t correct = 0;
  if (spec.arch == Architecture::logistic) {
    const Eigen::VectorXd z = (batch.inputs.cast<double>() * wide[0].values()).array() + wide[1][0];
    for (Eigen::Index i = 0; i < z.size(); ++i) correct += (z[i] > 0) == (batch.labels[static_cast<std::size_t>(i)] == 1);
  } else {
    const auto acts = mlp_forward(spec, wide, batch);
    for (Eigen::Index i = 0; i < acts.back().rows(); ++i) {
      Eigen::Index best = 0;
      acts.back().row(i).maxCoeff(&best);
      correct += best == batch.labels[static_cast<std::size_t>(i)];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

double perplexity(double mean_cross_entropy) { return std::exp(mean_cross_entropy); }

}  // namespace dlcmd
