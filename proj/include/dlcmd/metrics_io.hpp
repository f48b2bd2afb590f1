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

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlcmd/config.hpp"
#include "dlcmd/trainer.hpp"

namespace dlcmd {

class MetricsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kMetricsColumns =
    "t,inner_steps,train_loss,eval_loss,perplexity,bytes_sent,bytes_recv,drift,wall_ms";

// "# key = value" lines for every experiment field, then the column line.
std::string metrics_header(const RunConfig& config);
std::string metrics_row(const MetricsRecord& record);

struct MetricsFile {
  RunConfig config;
  std::vector<MetricsRecord> records;
};

MetricsFile parse_metrics(const std::string& text);
MetricsFile read_metrics(const std::filesystem::path& path);

// Appends rows as they arrive and flushes each one, so a failed run leaves
// every completed record on disk.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const RunConfig& config);
  void write(const MetricsRecord& record);

 private:
  std::ofstream out_;
};

}  // namespace dlcmd
