#include "ipd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace ipd {

std::optional<double> cooperation_rate(std::span<const Action> actions) {
  if (actions.empty()) return std::nullopt;
  const auto a_count = std::count(actions.begin(), actions.end(), Action::A);
  return static_cast<double>(a_count) / static_cast<double>(actions.size());
}

std::vector<double> running_cooperation_rate(std::span<const Action> actions) {
  std::vector<double> out;
  out.reserve(actions.size());
  long a_count = 0;
  for (std::size_t r = 0; r < actions.size(); ++r) {
    a_count += is_cooperative(actions[r]) ? 1 : 0;
    out.push_back(static_cast<double>(a_count) / static_cast<double>(r + 1));
  }
  return out;
}

std::optional<double> one_shot_rate(std::span<const Action> first_moves) { return cooperation_rate(first_moves); }

double student_t_quantile(double p, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

std::pair<double, double> CiResult::clamped() const {
  return {std::clamp(ci_low, 0.0, 1.0), std::clamp(ci_high, 0.0, 1.0)};
}

CiResult mean_with_ci(std::span<const double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("mean_with_ci needs at least one sample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  CiResult r;
  r.samples = samples.size();
  const double k = static_cast<double>(samples.size());
  r.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / k;
  const bool constant = std::all_of(samples.begin(), samples.end(), [&](double x) { return x == samples[0]; });
  if (constant) r.mean = samples[0];
  if (samples.size() == 1 || constant) {
    r.ci_low = r.ci_high = r.mean;
    r.degenerate = samples.size() == 1;
    return r;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - r.mean) * (x - r.mean);
  const double s = std::sqrt(ss / (k - 1.0));
  r.half_width = s == 0.0 ? 0.0 : student_t_quantile((1.0 + level) / 2.0, k - 1.0) * s / std::sqrt(k);
  r.ci_low = r.mean - r.half_width;
  r.ci_high = r.mean + r.half_width;
  return r;
}

std::vector<MetricSeriesPoint> aggregate_series(const std::vector<std::vector<double>>& per_sample, double level) {
  std::size_t longest = 0;
  for (const auto& s : per_sample) longest = std::max(longest, s.size());
  std::vector<MetricSeriesPoint> out;
  for (std::size_t i = 0; i < longest; ++i) {
    MetricSeriesPoint point;
    point.index = static_cast<int>(i) + 1;
    for (const auto& s : per_sample) {
      if (i < s.size()) point.values.push_back(s[i]);
    }
    point.ci = mean_with_ci(point.values, level);
    out.push_back(std::move(point));
  }
  return out;
}

std::optional<bool> opponent_follows_tit_for_tat(const MatchRecord& match, PlayerId perspective, double threshold) {
  if (match.rounds.empty()) return std::nullopt;
  const int me = match.side_of(perspective);
  const int them = 1 - me;
  int agree = 0;
  for (std::size_t i = 0; i < match.rounds.size(); ++i) {
    const Action predicted = i == 0 ? Action::A : match.rounds[i - 1].actions[me];
    if (match.rounds[i].actions[them] == predicted) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(match.rounds.size()) >= threshold;
}

std::optional<bool> opponent_is_forgiving(const MatchRecord& match, PlayerId perspective, double threshold) {
  const int me = match.side_of(perspective);
  const int them = 1 - me;
  int opportunities = 0;
  int forgiven = 0;
  for (std::size_t i = 1; i < match.rounds.size(); ++i) {
    if (match.rounds[i - 1].actions[me] != Action::B) continue;
    ++opportunities;
    if (match.rounds[i].actions[them] == Action::A) ++forgiven;
  }
  if (opportunities == 0) return std::nullopt;
  return static_cast<double>(forgiven) / static_cast<double>(opportunities) > threshold;
}

std::vector<std::optional<MetaValue>> meta_ground_truth(const MatchRecord& match, PlayerId perspective,
                                                        int total_score, const MetaConfig& meta) {
  std::vector<std::optional<MetaValue>> truths;
  for (const auto& q : meta.questions) {
    std::optional<MetaValue> truth;
    if (q.id == "strategy") {
      if (auto v = opponent_follows_tit_for_tat(match, perspective, meta.tft_threshold)) truth = *v;
    } else if (q.id == "behavior") {
      if (auto v = opponent_is_forgiving(match, perspective, meta.forgiving_threshold)) truth = *v;
    } else if (q.id == "total_score") {
      truth = total_score;
    }
    truths.push_back(truth);
  }
  return truths;
}

std::vector<MetaScore> meta_accuracy(std::span<const ScoredAnswer> answers) {
  std::vector<MetaScore> scores;
  auto slot = [&](const std::string& id) -> MetaScore& {
    auto it = std::find_if(scores.begin(), scores.end(), [&](const MetaScore& s) { return s.question_id == id; });
    if (it != scores.end()) return *it;
    scores.push_back(MetaScore{id, 0, 0, std::nullopt});
    return scores.back();
  };
  for (const auto& a : answers) {
    auto& s = slot(a.question_id);
    if (a.unparsed || !a.truth) continue;
    ++s.total;
    if (a.answer == *a.truth) ++s.correct;
  }
  for (auto& s : scores) {
    if (s.total > 0) s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.total);
  }
  return scores;
}

}  // namespace ipd
