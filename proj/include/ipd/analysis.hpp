#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipd/config.hpp"
#include "ipd/event_log.hpp"
#include "ipd/game.hpp"
#include "ipd/metrics.hpp"

namespace ipd {

/// Post-match answers of one player, as logged.
struct MetaRecord {
  int match_id = 0;
  PlayerId player;
  int total_score = 0;
  std::vector<std::string> question_ids;
  std::vector<MetaValue> answers;
  std::vector<bool> unparsed;
};

/// One trial rebuilt from its event log.
struct TrialData {
  int trial = 0;
  std::uint64_t seed = 0;
  TournamentConfig config;  // from the trial_start echo
  std::vector<MatchRecord> matches;  // play order, skipped matches included
  std::vector<MetaRecord> meta;
  bool complete = false;  // trial_end with status complete
};

/// Throws SchemaMismatch when the log's schema version differs from kSchemaVersion,
/// LogParseError (line = event seq) when the events are structurally inconsistent.
TrialData load_trial(std::span<const Event> events, const std::string& origin = "<events>");
TrialData load_trial_file(const std::filesystem::path& path);

/// Sampling unit for confidence intervals.
enum class SampleUnit { player_trial, trial };
std::optional<SampleUnit> sample_unit_from_string(std::string_view s);

/// One player's action history in one trial.
struct PlayerSeries {
  int trial = 0;
  PlayerId player;
  std::vector<Action> actions;      // every round played, in order
  std::vector<double> p_c;          // running cooperation rate after each round
  std::vector<Action> first_moves;  // round-1 action of each played match
  std::vector<double> p_osc;        // running one-shot rate after each played match
  int unparsed_rounds = 0;
};

std::vector<PlayerSeries> player_series(std::span<const TrialData> trials);

struct SplitSample {
  int trial = 0;
  PlayerId player;
  bool intra = false;
  int rounds = 0;
  double p_c = 0.0;
};

struct GroupSplit {
  std::vector<SplitSample> samples;  // one per player-trial and split with at least one round
  std::optional<CiResult> intra;
  std::optional<CiResult> inter;
};

/// Cooperation over rounds of intra-group matches and of inter-group matches,
/// one sample per player-trial. The intra side is empty under GC.
GroupSplit group_split_rates(std::span<const TrialData> trials, double level = 0.95);

/// Every parsed or unparsed answer with the truth recomputed from the match log.
std::vector<ScoredAnswer> scored_meta_answers(std::span<const TrialData> trials);

struct ConditionSummary {
  Condition condition = Condition::SA;
  int trials = 0;
  std::optional<CiResult> mu_c;    // over final p_c of each sample
  std::optional<CiResult> mu_osc;  // over final p_osc of each sample
  std::vector<MetricSeriesPoint> coop_by_round;
  std::vector<MetricSeriesPoint> osc_by_match;
};

/// mu_c / mu_osc and their per-round / per-match series for trials of one condition.
ConditionSummary summarize(std::span<const TrialData> trials, SampleUnit unit = SampleUnit::player_trial,
                           double level = 0.95);

struct QualityRow {
  int trial = 0;
  PlayerId player;
  int rounds = 0;
  int unparsed_rounds = 0;
  int meta_answers = 0;
  int unparsed_meta = 0;
  bool trial_complete = false;
};

std::vector<QualityRow> data_quality(std::span<const TrialData> trials);

}  // namespace ipd
