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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "dlcmd/checkpoint.hpp"
#include "dlcmd/config.hpp"
#include "dlcmd/metrics_io.hpp"
#include "dlcmd/report.hpp"
#include "dlcmd/selftest.hpp"
#include "dlcmd/tcp_collective.hpp"
#include "dlcmd/trainer.hpp"

namespace dlcmd {

namespace fs = std::filesystem;

namespace {

std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

// Flags for every config field plus --config and repeated --set key=value.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;  // by field name
  std::vector<std::string> sets;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "config file of 'key = value' lines");
    for (const auto& field : config_fields()) {
      app.add_option("--" + flag_name(field.name), values[field.name], field.help);
    }
    app.add_option("--set", sets, "override any config key, as key=value");
  }

  std::vector<std::pair<std::string, std::string>> overrides(const CLI::App& app) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& field : config_fields()) {
      if (app.count("--" + flag_name(field.name)) > 0) out.emplace_back(field.name, values.at(field.name));
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
      out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
  }

  RunConfig load(const CLI::App& app) const {
    if (config_path.empty()) return parse_config("", overrides(app));
    return load_config(config_path, overrides(app));
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint make_checkpoint(const RunConfig& config, const ParamSet& params) {
  return Checkpoint{init_model(model_spec(config), config.seed).names, params};
}

void print_final(std::ostream& out, const RunConfig& config, const std::vector<MetricsRecord>& metrics) {
  if (metrics.empty()) return;
  const auto& last = metrics.back();
  out << to_string(config.algo) << ": rounds " << last.round << ", inner steps " << last.inner_steps
      << ", eval loss " << format_double(last.eval_loss) << ", perplexity " << format_double(last.perplexity)
      << ", bytes sent " << last.bytes_sent << ", drift " << format_double(last.drift) << "\n";
}

int cmd_run(const RunConfig& config, std::ostream& out) {
  const fs::path dir = config.out.empty() ? fs::path(".") : fs::path(config.out);
  fs::create_directories(dir);
  const Dataset data = prepare_dataset(config);

  if (config.backend == Backend::local) {
    MetricsWriter writer(dir / "metrics.csv", config);
    const auto result = run_experiment(config, data, [&](const MetricsRecord& r) { writer.write(r); });
    for (const auto& w : result.workers) {
      save_checkpoint(dir / ("checkpoint-rank" + std::to_string(w.rank) + ".bin"), make_checkpoint(config, w.params));
    }
    print_final(out, config, result.metrics);
    return kExitOk;
  }

  const auto peers = parse_peer_list(config.peers);
  if (static_cast<int>(peers.size()) != config.workers) {
    throw ConfigError("peers", "lists " + std::to_string(peers.size()) + " ranks, workers is " +
                                   std::to_string(config.workers));
  }
  const PeerAddress bind = config.listen.empty() ? peers[static_cast<std::size_t>(config.rank)] : parse_address(config.listen);
  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config.timeout * 1000));
  TcpCollective sync(config.rank, peers, TcpListener(bind), timeout);
  std::optional<MetricsWriter> writer;
  if (config.rank == 0) writer.emplace(dir / "metrics.csv", config);
  const auto result = run_worker(config, data, sync, [&](const MetricsRecord& r) {
    if (writer) writer->write(r);
  });
  save_checkpoint(dir / ("checkpoint-rank" + std::to_string(config.rank) + ".bin"), make_checkpoint(config, result.params));
  if (config.rank == 0) print_final(out, config, result.metrics);
  return kExitOk;
}

// A .csv argument is a finished run's metrics; anything else is a config to
// execute in-process.
std::vector<NamedRun> collect_runs(const std::vector<std::string>& inputs, std::ostream& log) {
  std::vector<NamedRun> runs;
  for (const auto& input : inputs) {
    const fs::path path(input);
    if (path.extension() == ".csv") {
      auto file = read_metrics(path);
      runs.push_back({run_name(file, path.stem().string()), std::move(file)});
      continue;
    }
    RunConfig config = load_config(path);
    const Dataset data = prepare_dataset(config);
    auto result = run_experiment(config, data);
    print_final(log, config, result.metrics);
    runs.push_back({run_name(MetricsFile{config, {}}, path.stem().string()), MetricsFile{config, result.metrics}});
  }
  return runs;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Communication-efficient distributed training experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one configuration and write metrics and checkpoints to --out");
  ConfigFlags run_flags;
  run_flags.attach(*run);

  auto* compare = app.add_subcommand("compare", "tabulate final quality and traffic of several runs");
  std::vector<std::string> compare_inputs;
  std::string compare_out;
  compare->add_option("inputs", compare_inputs, "metrics .csv files or config files to run")->required();
  compare->add_option("--out", compare_out, "write the table here instead of stdout");

  auto* report = app.add_subcommand("report", "loss-curve SVG and summary CSV from metrics files");
  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  report->add_option("inputs", report_inputs, "metrics .csv files")->required();
  report->add_option("--out", report_out, "output directory (default .)");

  auto* selftest = app.add_subcommand("selftest", "transform and optimizer invariant checks");
  std::uint64_t selftest_seed = 0;
  selftest->add_option("--seed", selftest_seed, "seed of the random cases (default 0)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags.load(*run), out);

    if (compare->parsed()) {
      const std::string table = comparison_csv(collect_runs(compare_inputs, err));
      if (compare_out.empty()) {
        out << table;
      } else {
        write_text(compare_out, table);
      }
      return kExitOk;
    }

    if (report->parsed()) {
      std::vector<NamedRun> runs;
      for (const auto& input : report_inputs) {
        auto file = read_metrics(input);
        runs.push_back({run_name(file, fs::path(input).stem().string()), std::move(file)});
      }
      write_text(fs::path(report_out) / "loss.svg", render_loss_svg(runs));
      write_text(fs::path(report_out) / "summary.csv", summary_csv(runs));
      return kExitOk;
    }

    if (selftest->parsed()) {
      int failed = 0;
      for (const auto& c : run_selftest(selftest_seed)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.suite << ": " << c.name << " (" << c.detail << ")\n";
        if (!c.passed) ++failed;
      }
      return failed == 0 ? kExitOk : kExitSelftest;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TaskMismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace dlcmd
