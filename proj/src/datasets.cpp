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

#include "dlcmd/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>

#include <Eigen/SVD>

#include "dlcmd/bytes.hpp"
#include "dlcmd/rng.hpp"

namespace dlcmd {

namespace {

constexpr std::uint8_t kDatasetVersion = 1;
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
constexpr std::uint64_t kShardStream = 0x7368617264ULL;
constexpr double kMaxCondition = 100.0;

void split(Dataset& d, double eval_fraction) {
  std::vector<std::int64_t> perm(static_cast<std::size_t>(d.examples));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(d.seed, kSplitStream);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  const auto n_eval = static_cast<std::size_t>(std::ceil(eval_fraction * static_cast<double>(d.examples)));
  d.eval.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_eval));
  d.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_eval), perm.end());
  std::sort(d.eval.begin(), d.eval.end());
  std::sort(d.train.begin(), d.train.end());
}

void generate_quadratic(Dataset& d, Rng& rng) {
  const auto n = d.examples;
  const auto p = d.feature_dim;
  if (n < 4 * p) throw std::invalid_argument("quadratic dataset needs size >= 4 * feature_dim for a well-conditioned A");
  Eigen::MatrixXd a(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = static_cast<float>(rng.normal());
  Eigen::VectorXd optimum(p);
  for (Eigen::Index j = 0; j < p; ++j) optimum[j] = rng.normal();

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 0 || sv[0] / sv[sv.size() - 1] > kMaxCondition) {
    throw std::invalid_argument("quadratic dataset: condition number exceeds 100; increase size");
  }

  const Eigen::VectorXd b = a * optimum;
  d.features.resize(static_cast<std::size_t>(n * p));
  d.targets.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.features[static_cast<std::size_t>(i * p + j)] = static_cast<float>(a(i, j));
    d.targets[static_cast<std::size_t>(i)] = static_cast<float>(b[i]);
  }
}

void generate_blobs(Dataset& d, Rng& rng, double separation) {
  const auto n = d.examples;
  const auto p = d.feature_dim;
  Eigen::VectorXd direction(p);
  for (Eigen::Index j = 0; j < p; ++j) direction[j] = rng.normal();
  direction.normalize();
  d.features.resize(static_cast<std::size_t>(n * p));
  d.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double sign = label == 1 ? 1.0 : -1.0;
    for (std::int64_t j = 0; j < p; ++j) {
      const double mean = sign * 0.5 * separation * direction[j];
      d.features[static_cast<std::size_t>(i * p + j)] = static_cast<float>(mean + rng.normal());
    }
    d.labels[static_cast<std::size_t>(i)] = label;
  }
}

void generate_char_lm(Dataset& d, Rng& rng) {
  const auto v = d.vocab;
  const auto ctx = d.context;
  // Transition table: next-token distribution for every (prev2, prev1).
  std::vector<std::vector<double>> cdf(static_cast<std::size_t>(v * v), std::vector<double>(static_cast<std::size_t>(v)));
  for (auto& row : cdf) {
    double total = 0.0;
    for (auto& w : row) {
      w = std::exp(3.0 * rng.normal());
      total += w;
    }
    double run = 0.0;
    for (auto& w : row) {
      run += w / total;
      w = run;
    }
    row.back() = 1.0;
  }
  const std::int64_t length = d.examples + ctx;
  std::vector<std::int32_t> text(static_cast<std::size_t>(length));
  text[0] = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(v)));
  text[1] = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(v)));
  for (std::int64_t i = 2; i < length; ++i) {
    const auto& row = cdf[static_cast<std::size_t>(text[static_cast<std::size_t>(i - 2)] * v + text[static_cast<std::size_t>(i - 1)])];
    const double u = rng.uniform();
    text[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(std::upper_bound(row.begin(), row.end(), u) - row.begin());
    if (text[static_cast<std::size_t>(i)] >= v) text[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(v - 1);
  }
  d.tokens.resize(static_cast<std::size_t>(d.examples * ctx));
  d.labels.resize(static_cast<std::size_t>(d.examples));
  for (std::int64_t i = 0; i < d.examples; ++i) {
    for (std::int64_t j = 0; j < ctx; ++j) d.tokens[static_cast<std::size_t>(i * ctx + j)] = text[static_cast<std::size_t>(i + j)];
    d.labels[static_cast<std::size_t>(i)] = text[static_cast<std::size_t>(i + ctx)];
  }
}

template <typename T>
void put_array(ByteWriter& w, const std::vector<T>& values) {
  for (const auto& x : values) {
    if constexpr (std::is_same_v<T, float>) {
      w.put_f32(x);
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      w.put<std::uint64_t>(static_cast<std::uint64_t>(x));
    } else {
      w.put<T>(x);
    }
  }
}

template <typename T>
std::vector<T> get_array(ByteReader& r, std::uint64_t count) {
  if (count > r.remaining()) throw DecodeError("dataset file truncated");
  std::vector<T> out(static_cast<std::size_t>(count));
  for (auto& x : out) {
    if constexpr (std::is_same_v<T, float>) {
      x = r.get_f32();
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      x = static_cast<std::int64_t>(r.get<std::uint64_t>());
    } else {
      x = r.get<T>();
    }
  }
  return out;
}

}  // namespace

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::quadratic:
      return "quadratic";
    case DatasetKind::blobs:
      return "blobs";
    case DatasetKind::char_lm:
      return "char-lm";
  }
  return "unknown";
}

DatasetKind dataset_kind_for(Architecture arch) {
  switch (arch) {
    case Architecture::quadratic:
      return DatasetKind::quadratic;
    case Architecture::logistic:
    case Architecture::mlp:
      return DatasetKind::blobs;
    case Architecture::char_lm:
      return DatasetKind::char_lm;
  }
  return DatasetKind::blobs;
}

Dataset generate(const DatasetSpec& spec) {
  if (spec.size < 2) throw std::invalid_argument("dataset size must be at least 2");
  if (!(spec.eval_fraction > 0.0 && spec.eval_fraction < 1.0)) throw std::invalid_argument("eval fraction must be in (0, 1)");
  Dataset d;
  d.kind = spec.kind;
  d.seed = spec.seed;
  d.examples = spec.size;
  Rng rng(spec.seed, static_cast<std::uint64_t>(spec.kind));
  switch (spec.kind) {
    case DatasetKind::quadratic:
      if (spec.feature_dim < 1) throw std::invalid_argument("feature_dim must be positive");
      d.feature_dim = spec.feature_dim;
      generate_quadratic(d, rng);
      break;
    case DatasetKind::blobs:
      if (spec.feature_dim < 1) throw std::invalid_argument("feature_dim must be positive");
      d.feature_dim = spec.feature_dim;
      generate_blobs(d, rng, spec.separation);
      break;
    case DatasetKind::char_lm:
      if (spec.vocab < 2 || spec.vocab > 64) throw std::invalid_argument("char-lm vocab must be in [2, 64]");
      if (spec.context < 2) throw std::invalid_argument("char-lm context must be at least 2");
      d.vocab = spec.vocab;
      d.context = spec.context;
      generate_char_lm(d, rng);
      break;
  }
  split(d, spec.eval_fraction);
  return d;
}

void check_compatible(const ModelSpec& spec, const Dataset& data) {
  if (dataset_kind_for(spec.arch) != data.kind) {
    throw std::invalid_argument("model " + to_string(spec.arch) + " cannot train on a " + to_string(data.kind) + " dataset");
  }
  if (data.kind == DatasetKind::char_lm) {
    if (spec.vocab != data.vocab || spec.context != data.context) {
      throw std::invalid_argument("char-lm vocab/context do not match the dataset");
    }
  } else if (spec.input_dim != data.feature_dim) {
    throw std::invalid_argument("model input width " + std::to_string(spec.input_dim) + " does not match dataset feature_dim " +
                                std::to_string(data.feature_dim));
  }
}

Batch make_batch(const Dataset& data, std::span<const std::int64_t> indices) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(indices.size());
  if (data.kind == DatasetKind::char_lm) {
    b.inputs = Eigen::MatrixXf::Zero(n, data.context * data.vocab);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ex = indices[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < data.context; ++j) {
        const auto tok = data.tokens[static_cast<std::size_t>(ex * data.context + j)];
        b.inputs(i, j * data.vocab + tok) = 1.0f;
      }
    }
  } else {
    b.inputs.resize(n, data.feature_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ex = indices[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < data.feature_dim; ++j) {
        b.inputs(i, j) = data.features[static_cast<std::size_t>(ex * data.feature_dim + j)];
      }
    }
  }
  if (data.kind == DatasetKind::quadratic) {
    b.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) b.targets[i] = data.targets[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
  } else {
    b.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      b.labels[static_cast<std::size_t>(i)] = data.labels[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
    }
  }
  return b;
}

std::vector<Shard> shard(const Dataset& data, int workers, std::uint64_t seed) {
  if (workers < 1) throw std::invalid_argument("shard: worker count must be positive");
  if (static_cast<std::size_t>(workers) > data.train.size()) {
    throw std::invalid_argument("shard: " + std::to_string(workers) + " workers exceed " +
                                std::to_string(data.train.size()) + " training examples");
  }
  std::vector<std::int64_t> perm = data.train;
  Rng rng(seed, kShardStream);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<Shard> shards(static_cast<std::size_t>(workers));
  for (int r = 0; r < workers; ++r) shards[static_cast<std::size_t>(r)].rank = r;
  for (std::size_t i = 0; i < perm.size(); ++i) shards[i % static_cast<std::size_t>(workers)].indices.push_back(perm[i]);
  return shards;
}

BatchSampler::BatchSampler(std::vector<std::int64_t> pool, std::uint64_t seed, std::uint64_t stream, std::int64_t batch,
                           std::int64_t slot, std::int64_t slots)
    : pool_(std::move(pool)), seed_(seed), stream_(stream), batch_(batch), slot_(slot), slots_(slots) {
  if (pool_.empty()) throw std::invalid_argument("batch sampler: empty pool");
  if (batch_ < 1 || slots_ < 1 || slot_ < 0 || slot_ >= slots_) throw std::invalid_argument("batch sampler: bad batch layout");
  refill();
}

void BatchSampler::refill() {
  order_ = pool_;
  Rng rng(seed_, (stream_ << 20) ^ epoch_);
  std::shuffle(order_.begin(), order_.end(), rng.engine());
  ++epoch_;
  pos_ = 0;
}

std::vector<std::int64_t> BatchSampler::next() {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(batch_));
  const std::int64_t global = batch_ * slots_;
  for (std::int64_t j = 0; j < global; ++j) {
    if (pos_ == order_.size()) refill();
    const auto idx = order_[pos_++];
    if (j / batch_ == slot_) out.push_back(idx);
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
  Bytes buf;
  ByteWriter w(buf);
  for (char c : std::string("DSET")) w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
  w.put<std::uint8_t>(kDatasetVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(d.kind));
  w.put<std::uint64_t>(d.seed);
  for (auto count : {d.examples, d.feature_dim, d.vocab, d.context, static_cast<std::int64_t>(d.train.size()),
                     static_cast<std::int64_t>(d.eval.size())}) {
    w.put<std::uint64_t>(static_cast<std::uint64_t>(count));
  }
  put_array(w, d.features);
  put_array(w, d.targets);
  put_array(w, d.labels);
  put_array(w, d.tokens);
  put_array(w, d.train);
  put_array(w, d.eval);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing dataset file " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file " + path.string());
  const Bytes buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(buf);
  const auto magic = r.get_bytes(4);
  if (std::string(magic.begin(), magic.end()) != "DSET") throw DecodeError(path.string() + " is not a dataset file");
  if (r.get<std::uint8_t>() != kDatasetVersion) throw DecodeError(path.string() + ": unsupported dataset version");
  Dataset d;
  const auto tag = r.get<std::uint8_t>();
  if (tag < 1 || tag > 3) throw DecodeError(path.string() + ": unknown dataset tag");
  d.kind = static_cast<DatasetKind>(tag);
  d.seed = r.get<std::uint64_t>();
  d.examples = static_cast<std::int64_t>(r.get<std::uint64_t>());
  d.feature_dim = static_cast<std::int64_t>(r.get<std::uint64_t>());
  d.vocab = static_cast<std::int64_t>(r.get<std::uint64_t>());
  d.context = static_cast<std::int64_t>(r.get<std::uint64_t>());
  const auto n_train = r.get<std::uint64_t>();
  const auto n_eval = r.get<std::uint64_t>();
  const auto n = static_cast<std::uint64_t>(d.examples);
  const bool lm = d.kind == DatasetKind::char_lm;
  d.features = get_array<float>(r, lm ? 0 : n * static_cast<std::uint64_t>(d.feature_dim));
  d.targets = get_array<float>(r, d.kind == DatasetKind::quadratic ? n : 0);
  d.labels = get_array<std::int32_t>(r, d.kind == DatasetKind::quadratic ? 0 : n);
  d.tokens = get_array<std::int32_t>(r, lm ? n * static_cast<std::uint64_t>(d.context) : 0);
  d.train = get_array<std::int64_t>(r, n_train);
  d.eval = get_array<std::int64_t>(r, n_eval);
  if (r.remaining() != 0) throw DecodeError(path.string() + ": trailing bytes");
  for (const auto* split : {&d.train, &d.eval}) {
    for (auto i : *split) {
      if (i < 0 || i >= d.examples) throw DecodeError(path.string() + ": split index out of range");
    }
  }
  return d;
}

}  // namespace dlcmd
