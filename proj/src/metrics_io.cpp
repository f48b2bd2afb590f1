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

#include "dlcmd/metrics_io.hpp"

#include <charconv>
#include <sstream>

namespace dlcmd {

namespace {

constexpr const char* kMagicLine = "# dlcmd metrics v1";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& text, int line_no) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw MetricsFormatError("line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

}  // namespace

std::string metrics_header(const RunConfig& config) {
  std::string out = std::string(kMagicLine) + "\n";
  for (const auto& [key, value] : experiment_fields(config)) out += "# " + key + " = " + value + "\n";
  out += kMetricsColumns;
  out += "\n";
  return out;
}

std::string metrics_row(const MetricsRecord& r) {
  std::string out;
  out += std::to_string(r.round) + ",";
  out += std::to_string(r.inner_steps) + ",";
  out += format_double(r.train_loss) + ",";
  out += format_double(r.eval_loss) + ",";
  out += format_double(r.perplexity) + ",";
  out += std::to_string(r.bytes_sent) + ",";
  out += std::to_string(r.bytes_recv) + ",";
  out += format_double(r.drift) + ",";
  out += std::to_string(r.wall_ms) + "\n";
  return out;
}

MetricsFile parse_metrics(const std::string& text) {
  MetricsFile file;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  bool columns_seen = false;

  if (!std::getline(ss, line) || line != kMagicLine) throw MetricsFormatError("missing metrics file marker");
  ++line_no;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!columns_seen) {
      if (line == kMetricsColumns) {
        columns_seen = true;
        continue;
      }
      if (line.rfind("# ", 0) != 0) throw MetricsFormatError("line " + std::to_string(line_no) + ": expected header");
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) throw MetricsFormatError("line " + std::to_string(line_no) + ": expected 'key = value'");
      try {
        set_field(file.config, line.substr(2, eq - 2), line.substr(eq + 3));
      } catch (const ConfigError& e) {
        throw MetricsFormatError("line " + std::to_string(line_no) + ": " + e.what());
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 9) {
      throw MetricsFormatError("line " + std::to_string(line_no) + ": expected 9 columns, got " +
                               std::to_string(cells.size()));
    }
    MetricsRecord r;
    r.round = parse_number<std::int64_t>(cells[0], line_no);
    r.inner_steps = parse_number<std::int64_t>(cells[1], line_no);
    r.train_loss = parse_number<double>(cells[2], line_no);
    r.eval_loss = parse_number<double>(cells[3], line_no);
    r.perplexity = parse_number<double>(cells[4], line_no);
    r.bytes_sent = parse_number<std::uint64_t>(cells[5], line_no);
    r.bytes_recv = parse_number<std::uint64_t>(cells[6], line_no);
    r.drift = parse_number<double>(cells[7], line_no);
    r.wall_ms = parse_number<std::int64_t>(cells[8], line_no);
    file.records.push_back(r);
  }
  if (!columns_seen) throw MetricsFormatError("missing column line");
  try {
    validate(file.config);
  } catch (const ConfigError& e) {
    throw MetricsFormatError(std::string("header: ") + e.what());
  }
  return file;
}

MetricsFile read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricsFormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_metrics(ss.str());
  } catch (const MetricsFormatError& e) {
    throw MetricsFormatError(path.string() + ": " + e.what());
  }
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, const RunConfig& config)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << metrics_header(config);
  out_.flush();
}

void MetricsWriter::write(const MetricsRecord& record) {
  out_ << metrics_row(record);
  out_.flush();
  if (!out_) throw std::runtime_error("metrics write failed");
}

}  // namespace dlcmd
