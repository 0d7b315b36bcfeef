#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ipd/analysis.hpp"
#include "ipd/config.hpp"
#include "ipd/errors.hpp"
#include "ipd/event_log.hpp"
#include "ipd/export.hpp"
#include "ipd/mock_backend.hpp"
#include "ipd/scheduler.hpp"
#include "ipd/tournament.hpp"

namespace fs = std::filesystem;
using namespace ipd;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kBackend = 3,
  kPartial = 4,
  kIo = 5,
  kCorruptLog = 6,
};

std::atomic<bool> g_stop{false};

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string condition;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
};

ConfigOverrides overrides_from(const CommonFlags& f) {
  ConfigOverrides o;
  o.seed = f.seed;
  o.trials = f.trials;
  if (!f.condition.empty()) o.condition = condition_from_string(f.condition);
  o.endpoint = f.endpoint;
  o.model = f.model;
  return o;
}

std::string events_name(int trial) { return "events_trial" + std::to_string(trial) + ".jsonl"; }
std::string exchanges_name(int trial) { return "exchanges_trial" + std::to_string(trial) + ".jsonl"; }

/// Expands directories to their events_trial*.jsonl files, sorted by trial.
std::vector<fs::path> collect_logs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (!fs::exists(p)) throw LogError("no such file or directory: " + in);
    if (!fs::is_directory(p)) {
      out.push_back(p);
      continue;
    }
    std::map<int, fs::path> found;
    for (const auto& entry : fs::directory_iterator(p)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("events_trial") && name.ends_with(".jsonl")) {
        const auto digits = name.substr(12, name.size() - 12 - 6);
        try {
          found[std::stoi(digits)] = entry.path();
        } catch (const std::exception&) {
        }
      }
    }
    if (found.empty()) throw LogError("no events_trial*.jsonl files in " + in);
    for (auto& [_, path] : found) out.push_back(path);
  }
  return out;
}

std::map<Condition, std::vector<TrialData>> load_by_condition(const std::vector<fs::path>& logs) {
  std::map<Condition, std::vector<TrialData>> out;
  for (const auto& p : logs) {
    TrialData t = load_trial_file(p);
    out[t.config.condition].push_back(std::move(t));
  }
  return out;
}

void export_grouped(const std::map<Condition, std::vector<TrialData>>& grouped, const fs::path& dir, SampleUnit unit) {
  if (grouped.size() == 1) {
    export_csv(grouped.begin()->second, dir, unit);
    return;
  }
  for (const auto& [cond, trials] : grouped) export_csv(trials, dir / std::string(to_string(cond)), unit);
}

int cmd_run(const CommonFlags& f, bool parallel) {
  const ConfigOverrides overrides = overrides_from(f);
  TournamentConfig config = load_config(f.config, overrides);
  validate_budget(config);
  const fs::path out = f.out.empty() ? fs::path("runs") / (std::string(to_string(config.condition)) + "-seed" +
                                                           std::to_string(config.seed))
                                     : fs::path(f.out);

  ModelResources resources = make_model_resources(config);
  if (config.uses_model() && !resources.client->health_check()) {
    std::cerr << "error: backend at " << config.model.endpoint << " is not reachable (GET "
              << config.model.health_path << " failed)\n";
    return kBackend;
  }

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw LogError("cannot create " + out.string() + ": " + ec.message());

  RunManifest manifest;
  manifest.config = to_json(config);
  manifest.overrides = to_json(overrides);
  manifest.seed = config.seed;
  manifest.started_at = utc_timestamp();
  for (int i = 0; i < config.trials; ++i) {
    manifest.trials.push_back({i, config.seed + static_cast<std::uint64_t>(i), "pending", events_name(i),
                               exchanges_name(i), ""});
  }
  write_manifest(out / "manifest.json", manifest);

  ExperimentOptions options;
  options.parallel_trials = parallel;
  const auto results = run_experiment(
      config,
      [&](int trial, std::uint64_t) {
        return std::make_unique<EventLog>(out / events_name(trial), out / exchanges_name(trial));
      },
      resources, options);

  int complete = 0;
  bool io_failure = false;
  bool backend_failure = false;
  for (const auto& r : results) {
    auto& entry = manifest.trials.at(static_cast<std::size_t>(r.trial));
    entry.status = r.status == TrialStatus::complete ? "complete" : "incomplete";
    entry.error = r.error;
    if (r.status == TrialStatus::complete) {
      ++complete;
      continue;
    }
    std::cerr << "error: trial " << r.trial << " incomplete: " << r.error << "\n";
    io_failure |= r.failure == FailureKind::io;
    backend_failure |= r.failure == FailureKind::backend;
  }

  int code = kOk;
  if (io_failure) code = kIo;
  else if (complete == 0 && backend_failure) code = kBackend;
  else if (complete < static_cast<int>(results.size())) code = kPartial;

  if (!io_failure) {
    std::vector<fs::path> logs;
    for (const auto& r : results) logs.push_back(out / events_name(r.trial));
    export_grouped(load_by_condition(logs), out / "csv", SampleUnit::player_trial);
  }

  manifest.finished_at = utc_timestamp();
  manifest.status = code == kOk ? "complete" : complete == 0 ? "failed" : "partial";
  write_manifest(out / "manifest.json", manifest);
  std::cout << "run " << manifest.status << ": " << complete << "/" << results.size() << " trials, output in "
            << out.string() << "\n";
  return code;
}

int cmd_schedule(const CommonFlags& f) {
  const TournamentConfig config = load_config(f.config, overrides_from(f));
  config.validate();
  const BudgetReport report = budget_report(config);
  if (report.satisfied) {
    for (const auto& p : build_schedule(config)) {
      std::cout << "match " << p.ordinal << ": player " << p.players[0].value << " vs player " << p.players[1].value
                << (p.intra_group ? " (intra-group)" : " (inter-group)") << "\n";
    }
  }
  std::cout << report.describe();
  validate_budget(config);
  std::cout << "budget check N < n*m: satisfied\n";
  return kOk;
}

int cmd_analyze(const std::vector<std::string>& inputs, const std::string& out, const std::string& unit_name) {
  const auto unit = sample_unit_from_string(unit_name);
  if (!unit) {
    std::cerr << "error: --ci-unit must be player_trial or trial\n";
    return kUsage;
  }
  const auto grouped = load_by_condition(collect_logs(inputs));
  std::vector<ConditionSummary> summaries;
  for (const auto& [cond, trials] : grouped) summaries.push_back(summarize(trials, *unit));
  std::cout << format_summary_tables(summaries);
  if (!out.empty()) export_grouped(grouped, out, *unit);
  return kOk;
}

int cmd_export(const std::vector<std::string>& inputs, const std::string& out, const std::string& unit_name) {
  const auto unit = sample_unit_from_string(unit_name);
  if (!unit) {
    std::cerr << "error: --ci-unit must be player_trial or trial\n";
    return kUsage;
  }
  export_grouped(load_by_condition(collect_logs(inputs)), out, *unit);
  return kOk;
}

int cmd_mock_serve(const std::string& host, int port, const MockOptions& options) {
  MockServer server(options);
  const int bound = server.start(host, port);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kOk;
}

void add_config_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "YAML tournament config")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Base seed (trial i uses seed+i)");
  cmd->add_option("--condition", f.condition, "Condition override")->check(CLI::IsMember({"ri", "gc", "sa"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterated prisoner's dilemma tournaments between scripted and language-model agents"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool parallel = false;
  auto* run = app.add_subcommand("run", "Run all trials of an experiment");
  add_config_flags(run, flags);
  run->add_option("--out", flags.out, "Output directory (default runs/<condition>-seed<seed>)");
  run->add_option("--trials", flags.trials, "Number of trials")->check(CLI::PositiveNumber);
  run->add_option("--endpoint", flags.endpoint, "Chat-completion endpoint, e.g. http://127.0.0.1:11434");
  run->add_option("--model", flags.model, "Model name sent to the backend");
  run->add_flag("--parallel-trials", parallel, "Run trials concurrently");

  auto* schedule = app.add_subcommand("schedule", "Print the pairings and budget check without playing");
  add_config_flags(schedule, flags);

  std::vector<std::string> inputs;
  std::string out_dir;
  std::string ci_unit = "player_trial";
  auto* analyze = app.add_subcommand("analyze", "Print mean cooperation tables for event logs");
  analyze->add_option("logs", inputs, "Event log files or run directories")->required();
  analyze->add_option("--out", out_dir, "Also write CSVs here");
  analyze->add_option("--ci-unit", ci_unit, "CI sampling unit: player_trial or trial");

  auto* exporter = app.add_subcommand("export", "Write CSVs for event logs");
  exporter->add_option("logs", inputs, "Event log files or run directories")->required();
  exporter->add_option("--out", out_dir, "Output directory")->required();
  exporter->add_option("--ci-unit", ci_unit, "CI sampling unit: player_trial or trial");

  std::string host = "127.0.0.1";
  int port = 8088;
  MockOptions mock;
  auto* serve = app.add_subcommand("mock-serve", "Serve the deterministic mock chat-completion backend");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--delay-ms", mock.delay_ms, "Delay per completion");
  serve->add_option("--fail-first", mock.fail_first, "Answer the first N completions with HTTP 500");
  serve->add_option("--malformed-every", mock.malformed_every, "Every Nth completion has no JSON payload");
  serve->add_option("--exit-percent", mock.exit_percent, "Percent of move replies that end the match");
  serve->add_option("--deviate-percent", mock.deviate_percent, "Percent of move replies that play action_b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(flags, parallel);
    if (*schedule) return cmd_schedule(flags);
    if (*analyze) return cmd_analyze(inputs, out_dir, ci_unit);
    if (*exporter) return cmd_export(inputs, out_dir, ci_unit);
    if (*serve) return cmd_mock_serve(host, port, mock);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const TemplateError& e) {
    std::cerr << "template error: " << e.what() << "\n";
    return kConfig;
  } catch (const LogParseError& e) {
    std::cerr << "corrupt log: " << e.what() << "\n";
    return kCorruptLog;
  } catch (const SchemaMismatch& e) {
    std::cerr << "schema mismatch: " << e.what() << "\n";
    return kCorruptLog;
  } catch (const LogError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
