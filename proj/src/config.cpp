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

#include "dlcmd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace dlcmd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::int64_t> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_int(key, item));
  }
  return out;
}

std::string format_int_list(const std::vector<std::int64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

Algorithm parse_algorithm(const std::string& key, const std::string& v) {
  if (v == "ddp") return Algorithm::ddp;
  if (v == "diloco") return Algorithm::diloco;
  if (v == "demo") return Algorithm::demo;
  if (v == "dlc-md") return Algorithm::dlc_md;
  throw ConfigError(key, "expected one of ddp, diloco, demo, dlc-md; got '" + v + "'");
}

struct Accessor {
  ConfigField info;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define DLCMD_INT_FIELD(name, help, exp)                                                         \
  Accessor {                                                                                     \
    {#name, help, exp}, [](RunConfig& c, const std::string& v) { c.name = parse_int(#name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.name); }                                \
  }
#define DLCMD_REAL_FIELD(name, help)                                                              \
  Accessor {                                                                                      \
    {#name, help, true}, [](RunConfig& c, const std::string& v) { c.name = parse_real(#name, v); }, \
        [](const RunConfig& c) { return format_double(c.name); }                                  \
  }
#define DLCMD_STRING_FIELD(name, help, exp)                                          \
  Accessor {                                                                         \
    {#name, help, exp}, [](RunConfig& c, const std::string& v) { c.name = v; },      \
        [](const RunConfig& c) { return c.name; }                                    \
  }

const std::vector<Accessor>& accessors() {
  static const std::vector<Accessor> table = {
      Accessor{{"algo", "ddp | diloco | demo | dlc-md (default dlc-md)", true},
               [](RunConfig& c, const std::string& v) { c.algo = parse_algorithm("algo", v); },
               [](const RunConfig& c) { return to_string(c.algo); }},
      Accessor{{"workers", "number of workers W (default 2)", true},
               [](RunConfig& c, const std::string& v) { c.workers = static_cast<int>(parse_int("workers", v)); },
               [](const RunConfig& c) { return std::to_string(c.workers); }},
      DLCMD_INT_FIELD(outer_steps, "outer rounds T (default 100)", true),
      DLCMD_INT_FIELD(inner_steps, "inner AdamW steps per round H (default 8; forced to 1 for ddp and demo)", true),
      DLCMD_INT_FIELD(batch, "examples per inner step per worker (default 32)", true),
      DLCMD_INT_FIELD(micro_batch, "gradient-accumulation micro-batch, 0 = off (default 0)", true),
      DLCMD_REAL_FIELD(inner_lr, "inner learning rate; also the demo step size (default 0.01)"),
      DLCMD_REAL_FIELD(outer_lr, "outer learning rate (default 0.7)"),
      DLCMD_REAL_FIELD(beta, "outer momentum decay in [0, 1) (default 0.9)"),
      DLCMD_REAL_FIELD(alpha, "mixing coefficient in [0, 1] (default 0.5)"),
      DLCMD_INT_FIELD(topk, "retained frequencies per chunk, 1 <= topk <= chunk^2 (default 32)", true),
      DLCMD_INT_FIELD(chunk, "chunk edge per axis (default 64)", true),
      DLCMD_REAL_FIELD(weight_decay, "AdamW weight decay (default 0.01)"),
      DLCMD_REAL_FIELD(adam_beta1, "AdamW beta1 (default 0.9)"),
      DLCMD_REAL_FIELD(adam_beta2, "AdamW beta2 (default 0.999)"),
      DLCMD_REAL_FIELD(adam_eps, "AdamW epsilon (default 1e-8)"),
      DLCMD_INT_FIELD(warmup_steps, "linear inner-lr warm-up steps, 0 = off (default 0)", true),
      DLCMD_STRING_FIELD(model, "quadratic | logistic | mlp | char-lm (default mlp)", true),
      Accessor{{"hidden", "comma-separated hidden widths (default 16)", true},
               [](RunConfig& c, const std::string& v) { c.hidden = parse_int_list("hidden", v); },
               [](const RunConfig& c) { return format_int_list(c.hidden); }},
      DLCMD_INT_FIELD(feature_dim, "input features for quadratic/blobs data (default 2)", true),
      DLCMD_INT_FIELD(vocab, "char-lm vocabulary size (default 16)", true),
      DLCMD_INT_FIELD(context, "char-lm context length (default 8)", true),
      DLCMD_STRING_FIELD(dataset, "dataset file; empty generates one (default empty)", true),
      DLCMD_INT_FIELD(dataset_size, "generated dataset size (default 2048)", true),
      DLCMD_REAL_FIELD(separation, "blob mean separation in standard deviations (default 4)"),
      Accessor{{"seed", "run seed (default 0)", true},
               [](RunConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); },
               [](const RunConfig& c) { return std::to_string(c.seed); }},
      Accessor{{"shard_mode", "partition | replicated (default partition)", true},
               [](RunConfig& c, const std::string& v) {
                 if (v == "partition") {
                   c.shard_mode = ShardMode::partition;
                 } else if (v == "replicated") {
                   c.shard_mode = ShardMode::replicated;
                 } else {
                   throw ConfigError("shard_mode", "expected partition or replicated, got '" + v + "'");
                 }
               },
               [](const RunConfig& c) { return to_string(c.shard_mode); }},
      DLCMD_INT_FIELD(eval_interval, "rounds between metrics records (default 1)", true),
      Accessor{{"eval_mode", "rank0 | mean (default rank0)", true},
               [](RunConfig& c, const std::string& v) {
                 if (v == "rank0") {
                   c.eval_mode = EvalMode::rank0;
                 } else if (v == "mean") {
                   c.eval_mode = EvalMode::mean;
                 } else {
                   throw ConfigError("eval_mode", "expected rank0 or mean, got '" + v + "'");
                 }
               },
               [](const RunConfig& c) { return to_string(c.eval_mode); }},
      DLCMD_STRING_FIELD(label, "run label used by compare and report (default: algo)", true),
      Accessor{{"wall_clock", "record wall-clock ms in metrics (default false; keeps files reproducible)", true},
               [](RunConfig& c, const std::string& v) { c.wall_clock = parse_bool("wall_clock", v); },
               [](const RunConfig& c) { return std::string(c.wall_clock ? "true" : "false"); }},
      Accessor{{"backend", "local | tcp (default local)", false},
               [](RunConfig& c, const std::string& v) {
                 if (v == "local") {
                   c.backend = Backend::local;
                 } else if (v == "tcp") {
                   c.backend = Backend::tcp;
                 } else {
                   throw ConfigError("backend", "expected local or tcp, got '" + v + "'");
                 }
               },
               [](const RunConfig& c) { return to_string(c.backend); }},
      Accessor{{"rank", "this process's rank in tcp mode (default 0)", false},
               [](RunConfig& c, const std::string& v) { c.rank = static_cast<int>(parse_int("rank", v)); },
               [](const RunConfig& c) { return std::to_string(c.rank); }},
      DLCMD_STRING_FIELD(listen, "host:port to listen on in tcp mode", false),
      DLCMD_STRING_FIELD(peers, "rank=host:port,... for every rank in tcp mode", false),
      Accessor{{"timeout", "seconds per collective before failing (default 30)", false},
               [](RunConfig& c, const std::string& v) { c.timeout = parse_real("timeout", v); },
               [](const RunConfig& c) { return format_double(c.timeout); }},
      DLCMD_STRING_FIELD(out, "output directory", false),
  };
  return table;
}

#undef DLCMD_INT_FIELD
#undef DLCMD_REAL_FIELD
#undef DLCMD_STRING_FIELD

const Accessor& find(const std::string& key) {
  for (const auto& a : accessors()) {
    if (a.info.name == key) return a;
  }
  throw ConfigError(key, "unknown key");
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

}  // namespace

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::ddp:
      return "ddp";
    case Algorithm::diloco:
      return "diloco";
    case Algorithm::demo:
      return "demo";
    case Algorithm::dlc_md:
      return "dlc-md";
  }
  return "unknown";
}

std::string to_string(Backend backend) { return backend == Backend::local ? "local" : "tcp"; }
std::string to_string(ShardMode mode) { return mode == ShardMode::partition ? "partition" : "replicated"; }
std::string to_string(EvalMode mode) { return mode == EvalMode::rank0 ? "rank0" : "mean"; }

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> out;
    for (const auto& a : accessors()) out.push_back(a.info);
    return out;
  }();
  return fields;
}

void set_field(RunConfig& config, const std::string& key, const std::string& value) { find(key).set(config, trim(value)); }

std::string get_field(const RunConfig& config, const std::string& key) { return find(key).get(config); }

RunConfig parse_config(const std::string& text, const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value', got '" + line + "'");
    }
    set_field(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  for (const auto& [key, value] : overrides) set_field(config, key, value);
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

void validate(RunConfig& c) {
  require(c.workers >= 1, "workers", "must be at least 1");
  require(c.outer_steps >= 1, "outer_steps", "must be at least 1");
  require(c.inner_steps >= 0, "inner_steps", "must be non-negative");
  if (c.algo == Algorithm::ddp || c.algo == Algorithm::demo) c.inner_steps = 1;
  require(c.batch >= 1, "batch", "must be at least 1");
  require(c.micro_batch >= 0 && c.micro_batch <= c.batch, "micro_batch", "must be in [0, batch]");
  require(c.inner_lr > 0, "inner_lr", "must be positive");
  require(c.outer_lr > 0, "outer_lr", "must be positive");
  require(c.beta >= 0 && c.beta < 1, "beta", "must be in [0, 1)");
  require(c.alpha >= 0 && c.alpha <= 1, "alpha", "must be in range [0,1]");
  require(c.chunk >= 1, "chunk", "must be at least 1");
  require(c.topk >= 1 && c.topk <= c.chunk * c.chunk, "topk",
          "must be in [1, chunk^2 = " + std::to_string(c.chunk * c.chunk) + "]");
  require(c.topk <= 65535, "topk", "must fit the u16 wire field");
  require(c.weight_decay >= 0, "weight_decay", "must be non-negative");
  require(c.adam_beta1 >= 0 && c.adam_beta1 < 1, "adam_beta1", "must be in [0, 1)");
  require(c.adam_beta2 >= 0 && c.adam_beta2 < 1, "adam_beta2", "must be in [0, 1)");
  require(c.adam_eps > 0, "adam_eps", "must be positive");
  require(c.warmup_steps >= 0, "warmup_steps", "must be non-negative");
  try {
    (void)parse_architecture(c.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  for (auto h : c.hidden) require(h >= 1, "hidden", "widths must be positive");
  if (c.model == "char-lm") require(c.hidden.size() == 1, "hidden", "char-lm takes exactly one hidden width");
  if (c.model == "char-lm") require(c.hidden[0] <= 128, "hidden", "char-lm hidden width must be at most 128");
  require(c.feature_dim >= 1, "feature_dim", "must be positive");
  require(c.vocab >= 2 && c.vocab <= 64, "vocab", "must be in [2, 64]");
  require(c.context >= 2, "context", "must be at least 2");
  require(c.dataset_size >= c.workers * c.batch, "dataset_size", "must be at least workers * batch");
  require(c.separation > 0, "separation", "must be positive");
  require(c.eval_interval >= 1, "eval_interval", "must be at least 1");
  require(c.outer_steps <= 0xFFFFFFFELL, "outer_steps", "must fit a u32 round id");
  require(c.timeout > 0, "timeout", "must be positive");
  if (c.backend == Backend::tcp) {
    require(c.rank >= 0 && c.rank < c.workers, "rank", "must be in [0, workers)");
    require(!c.peers.empty(), "peers", "required for the tcp backend");
  }
}

std::vector<std::pair<std::string, std::string>> experiment_fields(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : accessors()) {
    if (a.info.experiment) out.emplace_back(a.info.name, a.get(config));
  }
  return out;
}

ModelSpec model_spec(const RunConfig& c) {
  ModelSpec spec;
  spec.arch = parse_architecture(c.model);
  spec.input_dim = c.feature_dim;
  spec.hidden = c.hidden;
  spec.classes = 2;
  spec.vocab = c.vocab;
  spec.context = c.context;
  return spec;
}

DatasetSpec dataset_spec(const RunConfig& c) {
  DatasetSpec spec;
  spec.kind = dataset_kind_for(parse_architecture(c.model));
  spec.size = c.dataset_size;
  spec.feature_dim = c.feature_dim;
  spec.vocab = c.vocab;
  spec.context = c.context;
  spec.separation = c.separation;
  spec.seed = c.seed;
  return spec;
}

}  // namespace dlcmd
