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
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dlcmd/datasets.hpp"
#include "dlcmd/models.hpp"

namespace dlcmd {

enum class Algorithm { ddp, diloco, demo, dlc_md };
enum class Backend { local, tcp };
enum class ShardMode { partition, replicated };
enum class EvalMode { rank0, mean };

std::string to_string(Algorithm algo);
std::string to_string(Backend backend);
std::string to_string(ShardMode mode);
std::string to_string(EvalMode mode);

// Names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Algorithm algo = Algorithm::dlc_md;
  int workers = 2;
  std::int64_t outer_steps = 100;
  std::int64_t inner_steps = 8;
  std::int64_t batch = 32;
  std::int64_t micro_batch = 0;  // 0: no gradient accumulation
  double inner_lr = 0.01;
  double outer_lr = 0.7;
  double beta = 0.9;
  double alpha = 0.5;
  std::int64_t topk = 32;
  std::int64_t chunk = 64;  // chunk edge per axis
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t warmup_steps = 0;

  std::string model = "mlp";
  std::vector<std::int64_t> hidden = {16};
  std::int64_t feature_dim = 2;
  std::int64_t vocab = 16;
  std::int64_t context = 8;
  std::string dataset;  // file path; empty generates from the fields below
  std::int64_t dataset_size = 2048;
  double separation = 4.0;
  std::uint64_t seed = 0;
  ShardMode shard_mode = ShardMode::partition;

  std::int64_t eval_interval = 1;
  EvalMode eval_mode = EvalMode::rank0;
  std::string label;
  bool wall_clock = false;

  // Deployment; not part of the experiment identity.
  Backend backend = Backend::local;
  int rank = 0;
  std::string listen;
  std::string peers;
  double timeout = 30.0;  // seconds per collective
  std::string out;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ConfigField {
  std::string name;
  std::string help;
  bool experiment;  // serialized into metrics headers
};

const std::vector<ConfigField>& config_fields();

void set_field(RunConfig& config, const std::string& key, const std::string& value);
std::string get_field(const RunConfig& config, const std::string& key);

// `key = value` lines, '#' comments. Overrides are applied after the text,
// then the result is validated.
RunConfig parse_config(const std::string& text, const std::vector<std::pair<std::string, std::string>>& overrides = {});
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Checks ranges and cross-field invariants; forces inner_steps = 1 for ddp
// and demo.
void validate(RunConfig& config);

// Experiment-identity fields in declaration order.
std::vector<std::pair<std::string, std::string>> experiment_fields(const RunConfig& config);

ModelSpec model_spec(const RunConfig& config);
DatasetSpec dataset_spec(const RunConfig& config);

std::string format_double(double value);

}  // namespace dlcmd
