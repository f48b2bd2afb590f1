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

#include "dlcmd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace dlcmd {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 80;
constexpr double kRight = 180;
constexpr double kTop = 20;
constexpr double kBottom = 50;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const MetricsRecord& final_record(const NamedRun& run) {
  if (run.file.records.empty()) throw std::invalid_argument("run '" + run.name + "' has no records");
  return run.file.records.back();
}

}  // namespace

std::string run_name(const MetricsFile& file, const std::string& fallback) {
  return file.config.label.empty() ? fallback : file.config.label;
}

AxisRange padded_range(const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) return {0.0, 1.0};
  double span = hi - lo;
  if (span == 0) span = lo != 0 ? std::abs(lo) : 1.0;
  return {lo - 0.05 * span, hi + 0.05 * span};
}

std::string render_loss_svg(const std::vector<NamedRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("report needs at least one run");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& run : runs) {
    for (const auto& r : run.file.records) {
      if (!std::isfinite(r.train_loss)) continue;
      xs.push_back(static_cast<double>(r.inner_steps));
      ys.push_back(r.train_loss);
    }
  }
  const AxisRange xr = padded_range(xs);
  const AxisRange yr = padded_range(ys);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth) + "\" height=\"" + fixed(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<g class=\"axes\" data-x-min=\"" + format_double(xr.lo) + "\" data-x-max=\"" + format_double(xr.hi) +
         "\" data-y-min=\"" + format_double(yr.lo) + "\" data-y-max=\"" + format_double(yr.hi) + "\">\n";
  svg += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    svg += "<text x=\"" + fixed(px(fx)) + "\" y=\"" + fixed(kTop + ph + 16) + "\" text-anchor=\"middle\">" + tick(fx) +
           "</text>\n";
    svg += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py(fy) + 4) + "\" text-anchor=\"end\">" + tick(fy) +
           "</text>\n";
  }
  svg += "<text x=\"" + fixed(kLeft + pw / 2) + "\" y=\"" + fixed(kHeight - 10) +
         "\" text-anchor=\"middle\">inner steps</text>\n";
  svg += "<text x=\"16\" y=\"" + fixed(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fixed(kTop + ph / 2) + ")\">train loss</text>\n";
  svg += "</g>\n";

  for (std::size_t i = 0; i < runs.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& r : runs[i].file.records) {
      if (!std::isfinite(r.train_loss)) continue;
      if (!points.empty()) points += ' ';
      points += fixed(px(static_cast<double>(r.inner_steps))) + "," + fixed(py(r.train_loss));
    }
    svg += "<polyline class=\"run\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    const double lx = kLeft + pw + 12;
    svg += "<line x1=\"" + fixed(lx) + "\" y1=\"" + fixed(ly - 4) + "\" x2=\"" + fixed(lx + 20) + "\" y2=\"" +
           fixed(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed(lx + 26) + "\" y=\"" + fixed(ly) + "\">" + escape_xml(runs[i].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string summary_csv(const std::vector<NamedRun>& runs) {
  std::string out =
      "label,algo,workers,inner_steps_per_round,topk,rounds,inner_steps,final_train_loss,final_eval_loss,"
      "final_perplexity,bytes_sent,bytes_recv,max_drift\n";
  for (const auto& run : runs) {
    const auto& last = final_record(run);
    double drift = 0;
    for (const auto& r : run.file.records) drift = std::max(drift, r.drift);
    const auto& c = run.file.config;
    out += csv_cell(run.name) + "," + to_string(c.algo) + "," + std::to_string(c.workers) + "," +
           std::to_string(c.inner_steps) + "," + std::to_string(c.topk) + "," + std::to_string(last.round) + "," +
           std::to_string(last.inner_steps) + "," + format_double(last.train_loss) + "," +
           format_double(last.eval_loss) + "," + format_double(last.perplexity) + "," +
           std::to_string(last.bytes_sent) + "," + std::to_string(last.bytes_recv) + "," + format_double(drift) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> task_fields(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const char* key : {"model", "hidden", "feature_dim", "vocab", "context", "dataset", "dataset_size", "separation"}) {
    out.emplace_back(key, get_field(config, key));
  }
  return out;
}

std::string comparison_csv(const std::vector<NamedRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("compare needs at least one run");
  const auto task = task_fields(runs.front().file.config);
  for (const auto& run : runs) {
    const auto other = task_fields(run.file.config);
    for (std::size_t i = 0; i < task.size(); ++i) {
      if (other[i].second != task[i].second) {
        throw TaskMismatchError("runs '" + runs.front().name + "' and '" + run.name + "' differ in " + task[i].first +
                                " (" + task[i].second + " vs " + other[i].second + ")");
      }
    }
  }

  std::string out = "method,algo,topk,final_eval_loss,final_perplexity,aggregate_bytes\n";
  for (const auto& run : runs) {
    const auto& last = final_record(run);
    out += csv_cell(run.name) + "," + to_string(run.file.config.algo) + "," + std::to_string(run.file.config.topk) + "," +
           format_double(last.eval_loss) + "," + format_double(last.perplexity) + "," + std::to_string(last.bytes_sent) +
           "\n";
  }
  if (runs.size() < 2) return out;
  out += "\nbaseline,method,reduction\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      const double a = static_cast<double>(final_record(runs[i]).bytes_sent);
      const double b = static_cast<double>(final_record(runs[j]).bytes_sent);
      out += csv_cell(runs[i].name) + "," + csv_cell(runs[j].name) + "," + format_double(a / b) + "\n";
    }
  }
  return out;
}

}  // namespace dlcmd
