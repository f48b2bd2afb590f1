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

#include <stdexcept>
#include <string>
#include <vector>

#include "dlcmd/metrics_io.hpp"

namespace dlcmd {

struct NamedRun {
  std::string name;  // legend and table label
  MetricsFile file;
};

// Label for a run: its configured label, else `fallback`.
std::string run_name(const MetricsFile& file, const std::string& fallback);

struct AxisRange {
  double lo = 0;
  double hi = 1;
};

// [min, max] of the finite values widened by 5% of the span on each side. A
// zero span is widened by 5% of the magnitude (or 1 for zero).
AxisRange padded_range(const std::vector<double>& values);

// Training loss against cumulative inner steps, one polyline per run.
std::string render_loss_svg(const std::vector<NamedRun>& runs);

// One line per run with its final record.
std::string summary_csv(const std::vector<NamedRun>& runs);

class TaskMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fields that define the task; runs compared side by side must agree on them.
std::vector<std::pair<std::string, std::string>> task_fields(const RunConfig& config);

// Methods as rows with their final perplexity, final eval loss and aggregate
// bytes, followed by the communication ratio of every pair (earlier run over
// later run). Throws TaskMismatchError if the runs solve different tasks.
std::string comparison_csv(const std::vector<NamedRun>& runs);

}  // namespace dlcmd
