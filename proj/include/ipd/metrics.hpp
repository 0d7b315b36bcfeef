#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipd/agent_types.hpp"
#include "ipd/config.hpp"
#include "ipd/game.hpp"

namespace ipd {

/// p_c = (1/r) * #{i <= r : action_i = A}. Absent for an empty sequence.
std::optional<double> cooperation_rate(std::span<const Action> actions);

/// p_c after each of the r rounds.
std::vector<double> running_cooperation_rate(std::span<const Action> actions);

/// p_osc = (1/f) * #{matches whose first action is A}. Absent when f = 0.
std::optional<double> one_shot_rate(std::span<const Action> first_moves);

/// Two-sided Student-t quantile t_{p, dof}.
double student_t_quantile(double p, double dof);

struct CiResult {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double half_width = 0.0;
  std::size_t samples = 0;
  bool degenerate = false;  // a single sample: zero-width interval, not a real CI

  /// The interval clipped to [0, 1] for display; stored bounds stay raw.
  std::pair<double, double> clamped() const;
};

/// mean +/- t_{(1+level)/2, k-1} * s / sqrt(k), s the sample standard deviation.
/// Throws std::invalid_argument on an empty sample.
CiResult mean_with_ci(std::span<const double> samples, double level = 0.95);

/// One point of an aggregated series (a round number or a match number).
struct MetricSeriesPoint {
  int index = 0;
  std::vector<double> values;  // one per player-trial sample that reached `index`
  CiResult ci;
};

/// Aggregates per-sample running series: point r uses every sample with at least r values.
std::vector<MetricSeriesPoint> aggregate_series(const std::vector<std::vector<double>>& per_sample,
                                               double level = 0.95);

/// Did `perspective`'s opponent follow TFT (A first, then copy our previous move)
/// on at least `threshold` of the rounds? Absent for an empty match.
std::optional<bool> opponent_follows_tit_for_tat(const MatchRecord& match, PlayerId perspective, double threshold);

/// Did the opponent answer our B with A on more than `threshold` of the
/// opportunities? Absent (not scoreable) when we never played B before the last round.
std::optional<bool> opponent_is_forgiving(const MatchRecord& match, PlayerId perspective, double threshold);

/// Ground truth per configured question, aligned with `meta.questions`;
/// absent where the question is not scoreable. `total_score` is the
/// perspective player's tournament score after this match.
std::vector<std::optional<MetaValue>> meta_ground_truth(const MatchRecord& match, PlayerId perspective,
                                                        int total_score, const MetaConfig& meta);

struct ScoredAnswer {
  std::string question_id;
  MetaValue answer = false;
  std::optional<MetaValue> truth;
  bool unparsed = false;
};

struct MetaScore {
  std::string question_id;
  int correct = 0;
  int total = 0;
  std::optional<double> accuracy;  // correct / total when total > 0
};

/// Accuracy per question over scoreable, parsed answers; questions in first-seen order.
std::vector<MetaScore> meta_accuracy(std::span<const ScoredAnswer> answers);

}  // namespace ipd
