#include "ipd/event_log.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <sstream>

#include "ipd/errors.hpp"

namespace ipd {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 10> kKindNames = {
    "trial_start", "match_start", "plan",    "critique",           "move_pair",
    "payoff",      "match_end",   "meta_qa", "model_exchange_ref", "trial_end"};

std::ofstream open_truncated(const std::filesystem::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw LogError("cannot open " + p.string() + " for writing");
  return out;
}

void write_line(std::ofstream& out, const std::string& line, const std::filesystem::path& p) {
  out << line << '\n';
  out.flush();
  if (!out) throw LogError("write failed on " + p.string());
}

}  // namespace

std::string_view to_string(EventKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

json to_json(const Event& e) { return {{"seq", e.seq}, {"kind", to_string(e.kind)}, {"data", e.data}}; }

Event event_from_json(const json& j) {
  if (!j.is_object()) throw LogError("event is not a JSON object");
  if (!j.contains("seq") || !j["seq"].is_number_integer()) throw LogError("event has no integer 'seq'");
  if (!j.contains("kind") || !j["kind"].is_string()) throw LogError("event has no string 'kind'");
  const auto kind = event_kind_from_string(j["kind"].get<std::string>());
  if (!kind) throw LogError("unknown event kind '" + j["kind"].get<std::string>() + "'");
  if (!j.contains("data") || !j["data"].is_object()) throw LogError("event has no object 'data'");
  return Event{j["seq"].get<std::int64_t>(), *kind, j["data"]};
}

const Event& TrialRecorder::append(EventKind kind, json data) {
  if (closed_) throw LogError("append after trial_end");
  Event next{last_.seq + 1, kind, std::move(data)};
  write_event(next);
  last_ = std::move(next);
  if (kind == EventKind::trial_end) closed_ = true;
  return last_;
}

void TrialRecorder::record_exchange(std::int64_t seq, json record) {
  record["seq"] = seq;
  write_exchange(record);
}

EventLog::EventLog(std::filesystem::path events_path, std::filesystem::path exchanges_path)
    : events_path_(std::move(events_path)),
      exchanges_path_(std::move(exchanges_path)),
      events_(open_truncated(events_path_)),
      exchanges_(open_truncated(exchanges_path_)) {}

void EventLog::write_event(const Event& e) { write_line(events_, to_json(e).dump(), events_path_); }

void EventLog::write_exchange(const json& record) { write_line(exchanges_, record.dump(), exchanges_path_); }

std::vector<Event> parse_event_log(std::string_view text, const std::string& origin) {
  std::vector<Event> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw LogParseError(origin, line_no, "invalid JSON");
    try {
      Event e = event_from_json(j);
      if (!out.empty() && e.seq <= out.back().seq)
        throw LogError("sequence number " + std::to_string(e.seq) + " does not increase");
      out.push_back(std::move(e));
    } catch (const LogParseError&) {
      throw;
    } catch (const LogError& err) {
      throw LogParseError(origin, line_no, err.what());
    }
  }
  return out;
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_event_log(buf.str(), path.string());
}

std::vector<json> read_exchange_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open " + path.string());
  std::vector<json> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw LogParseError(path.string(), line_no, "invalid JSON");
    out.push_back(std::move(j));
  }
  return out;
}

json to_json(const RunManifest& m) {
  json trials = json::array();
  for (const auto& t : m.trials) {
    trials.push_back({{"trial", t.trial},
                      {"seed", t.seed},
                      {"status", t.status},
                      {"events_file", t.events_file},
                      {"exchanges_file", t.exchanges_file},
                      {"error", t.error}});
  }
  return {{"config", m.config},
          {"overrides", m.overrides},
          {"seed", m.seed},
          {"schema_version", m.schema_version},
          {"engine_version", m.engine_version},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at},
          {"status", m.status},
          {"trials", trials}};
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.config = j.at("config");
    m.overrides = j.at("overrides");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.schema_version = j.at("schema_version").get<int>();
    m.engine_version = j.at("engine_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.status = j.at("status").get<std::string>();
    for (const auto& t : j.at("trials")) {
      m.trials.push_back({t.at("trial").get<int>(), t.at("seed").get<std::uint64_t>(),
                          t.at("status").get<std::string>(), t.at("events_file").get<std::string>(),
                          t.at("exchanges_file").get<std::string>(), t.at("error").get<std::string>()});
    }
    return m;
  } catch (const json::exception& e) {
    throw LogError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out = open_truncated(tmp);
    out << to_json(m).dump(2) << '\n';
    out.flush();
    if (!out) throw LogError("write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw LogError("cannot move manifest into place at " + path.string() + ": " + ec.message());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LogError("cannot open " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw LogError(path.string() + ": invalid JSON");
  return manifest_from_json(j);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace ipd
