#include "ipd/analysis.hpp"

#include <algorithm>

#include "ipd/errors.hpp"

namespace ipd {

using nlohmann::json;

namespace {

std::optional<CiResult> ci_or_none(const std::vector<double>& values, double level) {
  if (values.empty()) return std::nullopt;
  return mean_with_ci(values, level);
}

std::array<bool, 2> bool_pair(const json& j) { return {j.at(0).get<bool>(), j.at(1).get<bool>()}; }

}  // namespace

TrialData load_trial(std::span<const Event> events, const std::string& origin) {
  if (events.empty() || events.front().kind != EventKind::trial_start)
    throw LogParseError(origin, 1, "event log does not open with trial_start");
  TrialData t;
  std::optional<MatchRecord> current;
  std::optional<RoundRecord> pending;
  for (const auto& e : events) {
    const auto& d = e.data;
    const auto where = [&](const std::string& what) {
      return LogParseError(origin, static_cast<std::size_t>(e.seq), std::string(to_string(e.kind)) + ": " + what);
    };
    try {
      switch (e.kind) {
        case EventKind::trial_start: {
          const int version = d.at("schema_version").get<int>();
          if (version != kSchemaVersion)
            throw SchemaMismatch("event log schema version " + std::to_string(version) + ", expected " +
                                 std::to_string(kSchemaVersion));
          t.trial = d.at("trial").get<int>();
          t.seed = d.at("seed").get<std::uint64_t>();
          t.config = config_from_json(d.at("config"));
          break;
        }
        case EventKind::match_start: {
          MatchRecord m;
          m.match_id = d.at("match_id").get<int>();
          m.players = {PlayerId{d.at("players").at(0).get<int>()}, PlayerId{d.at("players").at(1).get<int>()}};
          m.intra_group = d.at("intra_group").get<bool>();
          current = std::move(m);
          break;
        }
        case EventKind::move_pair: {
          if (!current) throw where("move outside a match");
          RoundRecord r;
          r.match_id = current->match_id;
          r.round_index = d.at("round").get<int>();
          for (int i = 0; i < 2; ++i) {
            const auto a = action_from_letter(d.at("actions").at(i).get<std::string>());
            if (!a) throw where("bad action");
            r.actions[i] = *a;
          }
          r.exit_requested = bool_pair(d.at("end_match"));
          r.opponent_masked = bool_pair(d.at("masked"));
          r.unparsed = bool_pair(d.at("unparsed"));
          pending = r;
          break;
        }
        case EventKind::payoff: {
          if (!current || !pending) throw where("payoff without a preceding move_pair");
          if (d.at("round").get<int>() != pending->round_index) throw where("round index mismatch");
          pending->payoffs = {d.at("payoffs").at(0).get<int>(), d.at("payoffs").at(1).get<int>()};
          current->rounds.push_back(*pending);
          pending.reset();
          break;
        }
        case EventKind::match_end: {
          if (!current) throw where("match_end outside a match");
          const auto reason = end_reason_from_string(d.at("reason").get<std::string>());
          if (!reason) throw where("unknown end reason");
          current->end_reason = reason;
          t.matches.push_back(std::move(*current));
          current.reset();
          break;
        }
        case EventKind::meta_qa: {
          MetaRecord m;
          m.match_id = d.at("match_id").get<int>();
          m.player = PlayerId{d.at("player").get<int>()};
          m.total_score = d.at("total_score").get<int>();
          m.question_ids = d.at("question_ids").get<std::vector<std::string>>();
          for (const auto& v : d.at("answers")) {
            if (v.is_boolean()) m.answers.emplace_back(v.get<bool>());
            else m.answers.emplace_back(v.get<int>());
          }
          m.unparsed = d.at("unparsed").get<std::vector<bool>>();
          if (m.answers.size() != m.question_ids.size() || m.unparsed.size() != m.question_ids.size())
            throw where("answer count differs from question count");
          t.meta.push_back(std::move(m));
          break;
        }
        case EventKind::trial_end: t.complete = d.at("status") == "complete"; break;
        case EventKind::plan:
        case EventKind::critique:
        case EventKind::model_exchange_ref: break;
      }
    } catch (const json::exception& ex) {
      throw where(ex.what());
    } catch (const ConfigError& ex) {
      throw where(ex.what());
    }
  }
  // An interrupted trial keeps the rounds of the match in progress.
  if (current && !current->rounds.empty()) t.matches.push_back(std::move(*current));
  return t;
}

TrialData load_trial_file(const std::filesystem::path& path) {
  const auto events = read_event_log(path);
  try {
    return load_trial(events, path.string());
  } catch (const SchemaMismatch& e) {
    throw SchemaMismatch(path.string() + ": " + e.what());
  }
}

std::optional<SampleUnit> sample_unit_from_string(std::string_view s) {
  if (s == "player_trial") return SampleUnit::player_trial;
  if (s == "trial") return SampleUnit::trial;
  return std::nullopt;
}

std::vector<PlayerSeries> player_series(std::span<const TrialData> trials) {
  std::vector<PlayerSeries> out;
  for (const auto& t : trials) {
    for (const auto& p : t.config.players) {
      PlayerSeries s;
      s.trial = t.trial;
      s.player = p;
      for (const auto& m : t.matches) {
        if (!m.involves(p) || m.rounds.empty()) continue;
        const int side = m.side_of(p);
        s.first_moves.push_back(m.rounds.front().actions[side]);
        for (const auto& r : m.rounds) {
          s.actions.push_back(r.actions[side]);
          if (r.unparsed[side]) ++s.unparsed_rounds;
        }
      }
      s.p_c = running_cooperation_rate(s.actions);
      s.p_osc = running_cooperation_rate(s.first_moves);
      out.push_back(std::move(s));
    }
  }
  return out;
}

GroupSplit group_split_rates(std::span<const TrialData> trials, double level) {
  GroupSplit out;
  std::vector<double> intra, inter;
  for (const auto& t : trials) {
    for (const auto& p : t.config.players) {
      std::array<int, 2> rounds{0, 0}, coop{0, 0};  // [inter, intra]
      for (const auto& m : t.matches) {
        if (!m.involves(p)) continue;
        const int side = m.side_of(p);
        const int k = m.intra_group ? 1 : 0;
        for (const auto& r : m.rounds) {
          ++rounds[k];
          if (is_cooperative(r.actions[side])) ++coop[k];
        }
      }
      for (int k = 1; k >= 0; --k) {
        if (rounds[k] == 0) continue;
        const double rate = static_cast<double>(coop[k]) / static_cast<double>(rounds[k]);
        out.samples.push_back({t.trial, p, k == 1, rounds[k], rate});
        (k == 1 ? intra : inter).push_back(rate);
      }
    }
  }
  out.intra = ci_or_none(intra, level);
  out.inter = ci_or_none(inter, level);
  return out;
}

std::vector<ScoredAnswer> scored_meta_answers(std::span<const TrialData> trials) {
  std::vector<ScoredAnswer> out;
  for (const auto& t : trials) {
    // score of each player right after each match, recomputed from the rounds
    std::map<PlayerId, int> running;
    std::map<std::pair<int, PlayerId>, int> score_after;
    for (const auto& m : t.matches) {
      for (int s = 0; s < 2; ++s) {
        for (const auto& r : m.rounds) running[m.players[s]] += r.payoffs[s];
        score_after[{m.match_id, m.players[s]}] = running[m.players[s]];
      }
    }
    for (const auto& rec : t.meta) {
      const auto match = std::find_if(t.matches.begin(), t.matches.end(),
                                      [&](const MatchRecord& m) { return m.match_id == rec.match_id; });
      if (match == t.matches.end()) throw LogError("meta answers for unknown match " + std::to_string(rec.match_id));
      MetaConfig asked;
      asked.tft_threshold = t.config.meta.tft_threshold;
      asked.forgiving_threshold = t.config.meta.forgiving_threshold;
      for (const auto& id : rec.question_ids) asked.questions.push_back(MetaQuestion{id, "", MetaQuestion::Answer::yes_no});
      const auto truths = meta_ground_truth(*match, rec.player, score_after.at({rec.match_id, rec.player}), asked);
      for (std::size_t i = 0; i < rec.question_ids.size(); ++i)
        out.push_back({rec.question_ids[i], rec.answers[i], truths[i], static_cast<bool>(rec.unparsed[i])});
    }
  }
  return out;
}

ConditionSummary summarize(std::span<const TrialData> trials, SampleUnit unit, double level) {
  ConditionSummary out;
  if (trials.empty()) return out;
  out.condition = trials.front().config.condition;
  out.trials = static_cast<int>(trials.size());
  const auto series = player_series(trials);

  std::vector<std::vector<double>> coop, osc;
  std::vector<double> final_c, final_osc;
  if (unit == SampleUnit::player_trial) {
    for (const auto& s : series) {
      coop.push_back(s.p_c);
      osc.push_back(s.p_osc);
      if (!s.p_c.empty()) final_c.push_back(s.p_c.back());
      if (!s.p_osc.empty()) final_osc.push_back(s.p_osc.back());
    }
  } else {
    // average across the players of each trial first
    const auto per_trial = [](const std::vector<const std::vector<double>*>& rows) {
      std::size_t longest = 0;
      for (const auto* r : rows) longest = std::max(longest, r->size());
      std::vector<double> means;
      for (std::size_t i = 0; i < longest; ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto* r : rows) {
          if (i < r->size()) {
            sum += (*r)[i];
            ++n;
          }
        }
        means.push_back(sum / n);
      }
      return means;
    };
    for (const auto& t : trials) {
      std::vector<const std::vector<double>*> c_rows, o_rows;
      std::vector<double> c_final, o_final;
      for (const auto& s : series) {
        if (s.trial != t.trial) continue;
        c_rows.push_back(&s.p_c);
        o_rows.push_back(&s.p_osc);
        if (!s.p_c.empty()) c_final.push_back(s.p_c.back());
        if (!s.p_osc.empty()) o_final.push_back(s.p_osc.back());
      }
      coop.push_back(per_trial(c_rows));
      osc.push_back(per_trial(o_rows));
      if (!c_final.empty()) final_c.push_back(mean_with_ci(c_final).mean);
      if (!o_final.empty()) final_osc.push_back(mean_with_ci(o_final).mean);
    }
  }
  out.coop_by_round = aggregate_series(coop, level);
  out.osc_by_match = aggregate_series(osc, level);
  out.mu_c = ci_or_none(final_c, level);
  out.mu_osc = ci_or_none(final_osc, level);
  return out;
}

std::vector<QualityRow> data_quality(std::span<const TrialData> trials) {
  std::vector<QualityRow> out;
  for (const auto& t : trials) {
    for (const auto& p : t.config.players) {
      QualityRow q;
      q.trial = t.trial;
      q.player = p;
      q.trial_complete = t.complete;
      for (const auto& m : t.matches) {
        if (!m.involves(p)) continue;
        const int side = m.side_of(p);
        for (const auto& r : m.rounds) {
          ++q.rounds;
          if (r.unparsed[side]) ++q.unparsed_rounds;
        }
      }
      for (const auto& rec : t.meta) {
        if (rec.player != p) continue;
        q.meta_answers += static_cast<int>(rec.answers.size());
        q.unparsed_meta += static_cast<int>(std::count(rec.unparsed.begin(), rec.unparsed.end(), true));
      }
      out.push_back(q);
    }
  }
  return out;
}

}  // namespace ipd
