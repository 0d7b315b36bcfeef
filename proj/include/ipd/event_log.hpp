#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ipd {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kEngineVersion = "0.1.0";

enum class EventKind {
  trial_start,
  match_start,
  plan,
  critique,
  move_pair,
  payoff,
  match_end,
  meta_qa,
  model_exchange_ref,
  trial_end,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

/// One log line: {"seq": n, "kind": "...", "data": {...}}.
struct Event {
  std::int64_t seq = 0;
  EventKind kind = EventKind::trial_start;
  nlohmann::json data = nlohmann::json::object();

  bool operator==(const Event&) const = default;
};

nlohmann::json to_json(const Event& e);
/// Throws LogError on a missing or mistyped field.
Event event_from_json(const nlohmann::json& j);

/// Sequenced, append-only sink for one trial's events. Sequence numbers start
/// at 1; appending after trial_end throws LogError.
class TrialRecorder {
 public:
  virtual ~TrialRecorder() = default;

  const Event& append(EventKind kind, nlohmann::json data);
  /// Stores a full model exchange keyed by the seq of its model_exchange_ref event.
  void record_exchange(std::int64_t seq, nlohmann::json record);

  bool closed() const { return closed_; }
  std::int64_t last_seq() const { return last_.seq; }

 protected:
  virtual void write_event(const Event& e) = 0;
  virtual void write_exchange(const nlohmann::json& record) = 0;

 private:
  Event last_;
  bool closed_ = false;
};

/// Keeps everything in memory; for tests and in-process analysis.
class MemoryRecorder final : public TrialRecorder {
 public:
  const std::vector<Event>& events() const { return events_; }
  const std::vector<nlohmann::json>& exchanges() const { return exchanges_; }

 protected:
  void write_event(const Event& e) override { events_.push_back(e); }
  void write_exchange(const nlohmann::json& record) override { exchanges_.push_back(record); }

 private:
  std::vector<Event> events_;
  std::vector<nlohmann::json> exchanges_;
};

/// JSON-lines event log plus a JSON-lines exchange sidecar. Every line is
/// flushed as it is written, so a crash leaves at most a truncated last line.
class EventLog final : public TrialRecorder {
 public:
  /// Truncates both files. Throws LogError when either cannot be opened.
  EventLog(std::filesystem::path events_path, std::filesystem::path exchanges_path);

  const std::filesystem::path& events_path() const { return events_path_; }
  const std::filesystem::path& exchanges_path() const { return exchanges_path_; }

 protected:
  void write_event(const Event& e) override;
  void write_exchange(const nlohmann::json& record) override;

 private:
  std::filesystem::path events_path_;
  std::filesystem::path exchanges_path_;
  std::ofstream events_;
  std::ofstream exchanges_;
};

/// Reads an event log. Throws LogError when the file cannot be opened and
/// LogParseError (with the 1-based line) on a bad line or a non-increasing seq.
std::vector<Event> read_event_log(const std::filesystem::path& path);
std::vector<Event> parse_event_log(std::string_view text, const std::string& origin = "<memory>");

std::vector<nlohmann::json> read_exchange_log(const std::filesystem::path& path);

struct TrialManifestEntry {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status;  // complete / incomplete / failed
  std::string events_file;
  std::string exchanges_file;
  std::string error;
};

/// Run-level metadata. Written before the first round and rewritten at the end.
struct RunManifest {
  nlohmann::json config;
  nlohmann::json overrides;
  std::uint64_t seed = 0;
  int schema_version = kSchemaVersion;
  std::string engine_version{kEngineVersion};
  std::string started_at;
  std::string finished_at;
  std::string status = "running";  // running / complete / partial / failed
  std::vector<TrialManifestEntry> trials;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
/// Writes via a temporary file and rename. Throws LogError on I/O failure.
void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

/// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

}  // namespace ipd
