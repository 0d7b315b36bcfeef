#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipd/analysis.hpp"

namespace ipd {

inline constexpr int kCsvSchemaVersion = 1;

/// Column lists of every exported file, keyed by file name, plus the version.
nlohmann::json csv_schema();

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// File name -> CSV text, a pure function of the trials.
std::vector<std::pair<std::string, std::string>> render_csv(std::span<const TrialData> trials,
                                                            SampleUnit unit = SampleUnit::player_trial);

/// Writes every CSV plus csv_schema.json into `dir` (created if missing) and
/// returns the written paths. Throws LogError on I/O failure.
std::vector<std::filesystem::path> export_csv(std::span<const TrialData> trials, const std::filesystem::path& dir,
                                              SampleUnit unit = SampleUnit::player_trial);

/// Throws SchemaMismatch when `dir/csv_schema.json` carries another version.
void check_csv_schema(const std::filesystem::path& dir);

/// Plain-text mean / 95% CI tables (two decimals, clamped to [0, 1]) for mu_c and mu_osc.
std::string format_summary_tables(std::span<const ConditionSummary> summaries);

}  // namespace ipd
