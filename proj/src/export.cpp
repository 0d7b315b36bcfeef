#include "ipd/export.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ipd/errors.hpp"

namespace ipd {

using nlohmann::json;

namespace {

const std::vector<std::pair<std::string, std::vector<std::string>>>& columns() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> cols = {
      {"coop_by_round.csv", {"trial", "player", "round", "action", "p_c"}},
      {"osc_by_match.csv", {"trial", "player", "match_index", "first_action", "p_osc"}},
      {"coop_summary.csv", {"round", "samples", "mean", "ci_low", "ci_high"}},
      {"osc_summary.csv", {"match_index", "samples", "mean", "ci_low", "ci_high"}},
      {"group_split.csv", {"split", "samples", "mean", "ci_low", "ci_high"}},
      {"group_split_samples.csv", {"trial", "player", "split", "rounds", "p_c"}},
      {"meta_accuracy.csv", {"question", "correct", "total", "accuracy"}},
      {"data_quality.csv",
       {"trial", "player", "rounds", "unparsed_rounds", "meta_answers", "unparsed_meta", "trial_complete"}},
      {"condition_summary.csv", {"condition", "metric", "samples", "mean", "ci_low", "ci_high"}},
  };
  return cols;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row(header); }

  template <typename... Cells>
  void add(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    row(r);
  }

  std::string str() const { return out_.str(); }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(char c) { return std::string(1, c); }
  static std::string cell(bool b) { return b ? "true" : "false"; }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ostringstream out_;
};

const std::vector<std::string>& header(const std::string& file) {
  for (const auto& [name, cols] : columns()) {
    if (name == file) return cols;
  }
  throw std::logic_error("no schema for " + file);
}

void summary_rows(CsvWriter& w, const std::vector<MetricSeriesPoint>& series) {
  for (const auto& p : series) w.add(p.index, p.ci.samples, p.ci.mean, p.ci.ci_low, p.ci.ci_high);
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

json csv_schema() {
  json files = json::object();
  for (const auto& [name, cols] : columns()) files[name] = cols;
  return {{"version", kCsvSchemaVersion}, {"files", files}};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::pair<std::string, std::string>> render_csv(std::span<const TrialData> trials, SampleUnit unit) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto series = player_series(trials);

  CsvWriter coop(header("coop_by_round.csv"));
  CsvWriter osc(header("osc_by_match.csv"));
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.actions.size(); ++i)
      coop.add(s.trial, s.player.value, static_cast<int>(i) + 1, to_letter(s.actions[i]), s.p_c[i]);
    for (std::size_t i = 0; i < s.first_moves.size(); ++i)
      osc.add(s.trial, s.player.value, static_cast<int>(i) + 1, to_letter(s.first_moves[i]), s.p_osc[i]);
  }
  out.emplace_back("coop_by_round.csv", coop.str());
  out.emplace_back("osc_by_match.csv", osc.str());

  const ConditionSummary summary = summarize(trials, unit);
  CsvWriter coop_summary(header("coop_summary.csv"));
  summary_rows(coop_summary, summary.coop_by_round);
  CsvWriter osc_summary(header("osc_summary.csv"));
  summary_rows(osc_summary, summary.osc_by_match);
  out.emplace_back("coop_summary.csv", coop_summary.str());
  out.emplace_back("osc_summary.csv", osc_summary.str());

  const GroupSplit split = group_split_rates(trials);
  CsvWriter split_csv(header("group_split.csv"));
  if (split.intra) split_csv.add("intra", split.intra->samples, split.intra->mean, split.intra->ci_low, split.intra->ci_high);
  if (split.inter) split_csv.add("inter", split.inter->samples, split.inter->mean, split.inter->ci_low, split.inter->ci_high);
  CsvWriter split_samples(header("group_split_samples.csv"));
  for (const auto& s : split.samples)
    split_samples.add(s.trial, s.player.value, s.intra ? "intra" : "inter", s.rounds, s.p_c);
  out.emplace_back("group_split.csv", split_csv.str());
  out.emplace_back("group_split_samples.csv", split_samples.str());

  CsvWriter meta(header("meta_accuracy.csv"));
  const auto answers = scored_meta_answers(trials);
  for (const auto& score : meta_accuracy(answers)) {
    meta.add(score.question_id, score.correct, score.total, score.accuracy ? format_double(*score.accuracy) : "");
  }
  out.emplace_back("meta_accuracy.csv", meta.str());

  CsvWriter quality(header("data_quality.csv"));
  for (const auto& q : data_quality(trials))
    quality.add(q.trial, q.player.value, q.rounds, q.unparsed_rounds, q.meta_answers, q.unparsed_meta, q.trial_complete);
  out.emplace_back("data_quality.csv", quality.str());

  CsvWriter cond(header("condition_summary.csv"));
  if (!trials.empty()) {
    const std::string name(to_string(summary.condition));
    if (summary.mu_c) cond.add(name, "mu_c", summary.mu_c->samples, summary.mu_c->mean, summary.mu_c->ci_low, summary.mu_c->ci_high);
    if (summary.mu_osc)
      cond.add(name, "mu_osc", summary.mu_osc->samples, summary.mu_osc->mean, summary.mu_osc->ci_low, summary.mu_osc->ci_high);
  }
  out.emplace_back("condition_summary.csv", cond.str());
  return out;
}

std::vector<std::filesystem::path> export_csv(std::span<const TrialData> trials, const std::filesystem::path& dir,
                                              SampleUnit unit) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw LogError("cannot create " + dir.string() + ": " + ec.message());
  auto files = render_csv(trials, unit);
  files.emplace_back("csv_schema.json", csv_schema().dump(2) + "\n");
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw LogError("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

void check_csv_schema(const std::filesystem::path& dir) {
  std::ifstream in(dir / "csv_schema.json");
  if (!in) throw LogError("cannot open " + (dir / "csv_schema.json").string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("version")) throw SchemaMismatch("csv_schema.json has no version");
  if (j["version"] != kCsvSchemaVersion)
    throw SchemaMismatch("CSV schema version " + j["version"].dump() + ", expected " + std::to_string(kCsvSchemaVersion));
}

std::string format_summary_tables(std::span<const ConditionSummary> summaries) {
  std::ostringstream out;
  const auto table = [&](const char* title, auto pick) {
    out << title << '\n' << "Condition  Mean  95% CI\n";
    for (const auto& s : summaries) {
      std::string name(to_string(s.condition));
      for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      const std::optional<CiResult>& ci = pick(s);
      out << name << std::string(11 - name.size(), ' ');
      if (!ci) {
        out << "n/a\n";
        continue;
      }
      const auto [lo, hi] = ci->clamped();
      out << two_decimals(ci->mean) << "  [" << two_decimals(lo) << ", " << two_decimals(hi) << "]";
      if (ci->degenerate) out << "  (single sample)";
      out << '\n';
    }
  };
  table("mu_c", [](const ConditionSummary& s) -> const std::optional<CiResult>& { return s.mu_c; });
  out << '\n';
  table("mu_osc", [](const ConditionSummary& s) -> const std::optional<CiResult>& { return s.mu_osc; });
  return out.str();
}

}  // namespace ipd
