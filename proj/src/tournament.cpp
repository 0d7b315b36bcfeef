#include "ipd/tournament.hpp"

#include <future>
#include <stdexcept>

#include "ipd/errors.hpp"

namespace ipd {

using nlohmann::json;

namespace {

json nullable(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json pairing_json(const Pairing& p) {
  return {{"ordinal", p.ordinal}, {"players", {p.players[0].value, p.players[1].value}}, {"intra_group", p.intra_group}};
}

std::string_view failure_name(FailureKind k) {
  switch (k) {
    case FailureKind::none: return "none";
    case FailureKind::backend: return "backend";
    case FailureKind::io: return "io";
    case FailureKind::other: return "other";
  }
  return "other";
}

std::vector<ViewRound> view_rounds(const MatchRecord& match, PlayerId p) {
  const int s = match.side_of(p);
  std::vector<ViewRound> out;
  out.reserve(match.rounds.size());
  for (const auto& r : match.rounds) out.push_back({r.actions[s], r.actions[1 - s], r.payoffs[s], r.payoffs[1 - s]});
  return out;
}

/// Drives one trial: owns the state, the agents and the recorder calls.
class TrialRunner {
 public:
  TrialRunner(const TournamentConfig& config, int trial, std::uint64_t seed, TrialRecorder& recorder,
              const ModelResources& resources)
      : config_(config), trial_(trial), recorder_(recorder), resources_(resources) {
    state_ = initial_state(config, seed);
    for (const auto& p : config.players) agents_[p] = make_agent(p, config, seed, resources);
  }

  TrialResult run() {
    TrialResult result;
    result.trial = trial_;
    result.seed = state_.seed;
    try {
      emit(EventKind::trial_start, {{"trial", trial_},
                                    {"seed", state_.seed},
                                    {"schema_version", kSchemaVersion},
                                    {"engine_version", kEngineVersion},
                                    {"config", config_echo(config_)},
                                    {"schedule", schedule_json()}});
      for (const auto& pairing : state_.schedule) play_match(pairing);
    } catch (const PairedBackendError& e) {
      log_exchanges(e.exchanges(), state_.current_match);
      fail(result, FailureKind::backend, e.what());
    } catch (const BackendError& e) {
      if (pending_side_) log_exchanges(*pending_side_, e.exchanges());
      fail(result, FailureKind::backend, e.what());
    } catch (const LogError& e) {
      fail(result, FailureKind::io, e.what());
    } catch (const std::exception& e) {
      fail(result, FailureKind::other, e.what());
    }
    if (result.status == TrialStatus::complete) {
      emit(EventKind::trial_end, {{"status", "complete"}, {"failure", "none"}, {"error", ""}});
    }
    result.state = std::move(state_);
    return result;
  }

 private:
  void fail(TrialResult& result, FailureKind kind, const std::string& what) {
    result.status = TrialStatus::incomplete;
    result.failure = kind;
    result.error = what;
    if (kind == FailureKind::io || recorder_.closed()) return;
    try {
      emit(EventKind::trial_end, {{"status", "incomplete"}, {"failure", failure_name(kind)}, {"error", what}});
    } catch (const LogError& e) {
      result.failure = FailureKind::io;
      result.error += "; " + std::string(e.what());
    }
  }

  const Event& emit(EventKind kind, json data) {
    const Event& e = recorder_.append(kind, std::move(data));
    state_.event_cursor = e.seq;
    return e;
  }

  json schedule_json() const {
    json s = json::array();
    for (const auto& p : state_.schedule) s.push_back(pairing_json(p));
    return s;
  }

  std::optional<GroupId> visible_group(PlayerId p) const {
    if (config_.condition == Condition::RI) return std::nullopt;
    return config_.group_of(p);
  }

  void log_exchange(PlayerId player, PromptKind kind, const ModelExchange& ex) {
    const Event& e = emit(EventKind::model_exchange_ref, {{"player", player.value},
                                                          {"kind", to_string(kind)},
                                                          {"attempt", ex.attempt},
                                                          {"status", ex.http_status},
                                                          {"error", ex.error}});
    recorder_.record_exchange(e.seq, {{"trial", trial_},
                                      {"player", player.value},
                                      {"kind", to_string(kind)},
                                      {"attempt", ex.attempt},
                                      {"status", ex.http_status},
                                      {"error", ex.error},
                                      {"latency_ms", ex.latency_ms},
                                      {"timestamp_ms", ex.timestamp_ms},
                                      {"request", ex.request_text},
                                      {"response", ex.response_text}});
  }

  void flush_exchanges(PlayerId p) {
    if (auto* m = dynamic_cast<ModelAgent*>(agents_.at(p).get())) {
      for (const auto& ex : m->take_exchanges()) log_exchange(p, ex.kind, ex.exchange);
    }
  }

  void log_exchanges(const std::pair<PlayerId, PromptKind>& who, const std::vector<ModelExchange>& exchanges) {
    flush_exchanges(who.first);
    for (const auto& ex : exchanges) log_exchange(who.first, who.second, ex);
  }

  void log_exchanges(const std::array<std::vector<ModelExchange>, 2>& exchanges,
                     const std::optional<MatchRecord>& match) {
    if (!match) return;
    for (int s = 0; s < 2; ++s) {
      flush_exchanges(match->players[s]);
      for (const auto& ex : exchanges[s]) log_exchange(match->players[s], PromptKind::move, ex);
    }
  }

  PlanningContext planning_context(PlayerId p) const {
    const auto& ps = state_.player(p);
    return PlanningContext{p,
                           visible_group(p),
                           config_.condition,
                           state_.matches_of(p),
                           config_.show_remaining_budget ? ps.remaining_budget : std::nullopt,
                           ps.score,
                           ps.rounds_played + 1};
  }

  void plan_if_due(PlayerId p) {
    auto& ps = state_.players.at(p);
    if (ps.rounds_played % config_.planning_interval != 0) return;
    const int round = ps.rounds_played + 1;
    ps.planning_rounds.push_back(round);
    Agent& agent = *agents_.at(p);
    const auto ctx = planning_context(p);

    pending_side_ = {p, PromptKind::plan};
    Plan draft = agent.make_plan(ctx, ps.plan, std::nullopt);
    flush_exchanges(p);
    emit(EventKind::plan, {{"player", p.value}, {"global_round", round}, {"stage", "draft"}, {"text", draft.text()}});

    pending_side_ = {p, PromptKind::critique};
    Critique critique = agent.critique_plan(draft, ctx);
    flush_exchanges(p);
    emit(EventKind::critique, {{"player", p.value}, {"global_round", round}, {"text", critique.text()}});

    pending_side_ = {p, PromptKind::plan};
    Plan final_plan = agent.make_plan(ctx, draft, critique);
    flush_exchanges(p);
    emit(EventKind::plan,
         {{"player", p.value}, {"global_round", round}, {"stage", "final"}, {"text", final_plan.text()}});
    pending_side_.reset();
    ps.plan = std::move(final_plan);
  }

  PlayerView view_for(PlayerId p, const MatchRecord& match, bool allow_mask) const {
    const auto& ps = state_.player(p);
    PlayerView v;
    v.self = p;
    v.self_group = visible_group(p);
    v.masked = allow_mask && config_.mask_first_round && match.rounds.empty();
    if (!v.masked) {
      v.opponent = match.opponent_of(p);
      v.opponent_group = visible_group(*v.opponent);
      v.match_players = match.players;
    }
    v.match_id = match.match_id;
    v.current_match_rounds = view_rounds(match, p);
    v.remaining_budget = config_.show_remaining_budget ? ps.remaining_budget : std::nullopt;
    v.total_score = ps.score;
    v.global_round = ps.rounds_played + 1;
    v.condition = config_.condition;
    v.current_plan = ps.plan;
    return v;
  }

  std::array<Decision, 2> decide(const MatchRecord& match) {
    const std::array<PlayerId, 2> ids = match.players;
    auto* m0 = dynamic_cast<ModelAgent*>(agents_.at(ids[0]).get());
    auto* m1 = dynamic_cast<ModelAgent*>(agents_.at(ids[1]).get());
    const std::array<PlayerView, 2> views{view_for(ids[0], match, true), view_for(ids[1], match, true)};
    std::array<Decision, 2> out;
    if (m0 && m1) {
      const auto completions =
          m0->client().complete_pair(m0->move_prompt(views[0]).text, m1->move_prompt(views[1]).text,
                                     ModelAgent::check_move, ModelAgent::check_move,
                                     {"player " + std::to_string(ids[0].value), "player " + std::to_string(ids[1].value)});
      out[0] = m0->accept_move(completions[0]);
      out[1] = m1->accept_move(completions[1]);
    } else {
      for (int s = 0; s < 2; ++s) {
        pending_side_ = {ids[s], PromptKind::move};
        out[s] = agents_.at(ids[s])->decide(views[s]);
      }
      pending_side_.reset();
    }
    flush_exchanges(ids[0]);
    flush_exchanges(ids[1]);
    return out;
  }

  void play_match(const Pairing& pairing) {
    MatchRecord match;
    match.match_id = pairing.ordinal;
    match.players = pairing.players;
    match.intra_group = pairing.intra_group;
    const auto g0 = config_.group_of(match.players[0]);
    const auto g1 = config_.group_of(match.players[1]);
    emit(EventKind::match_start, {{"match_id", match.match_id},
                                  {"players", {match.players[0].value, match.players[1].value}},
                                  {"intra_group", match.intra_group},
                                  {"groups", {g0 ? json(g0->value) : json(nullptr), g1 ? json(g1->value) : json(nullptr)}}});

    const auto exhausted = [&](PlayerId p) {
      const auto& b = state_.player(p).remaining_budget;
      return b && *b <= 0;
    };
    if (exhausted(match.players[0]) || exhausted(match.players[1])) {
      match.end_reason = EndReason::skipped;
      emit(EventKind::match_end, {{"match_id", match.match_id}, {"reason", to_string(EndReason::skipped)}, {"rounds", 0}});
      state_.completed_matches.push_back(std::move(match));
      return;
    }

    state_.current_match = match;
    for (;;) {
      MatchRecord& cur = *state_.current_match;
      for (const auto& p : cur.players) plan_if_due(p);
      const auto decisions = decide(cur);

      RoundInput input;
      const bool masked = config_.mask_first_round && cur.rounds.empty();
      for (int s = 0; s < 2; ++s) {
        input.actions[s] = decisions[s].action;
        input.exit_requested[s] = decisions[s].end_match;
        input.opponent_masked[s] = masked;
        input.unparsed[s] = decisions[s].unparsed;
      }
      const int round_index = static_cast<int>(cur.rounds.size()) + 1;
      emit(EventKind::move_pair, {{"match_id", cur.match_id},
                                  {"round", round_index},
                                  {"actions", {std::string(1, to_letter(input.actions[0])),
                                               std::string(1, to_letter(input.actions[1]))}},
                                  {"end_match", {input.exit_requested[0], input.exit_requested[1]}},
                                  {"masked", {input.opponent_masked[0], input.opponent_masked[1]}},
                                  {"unparsed", {input.unparsed[0], input.unparsed[1]}},
                                  {"reasoning", {decisions[0].rationale, decisions[1].rationale}}});

      const RoundRecord& rec = cur.append_round(input, config_.matrix);
      RemainingBudget remaining;
      for (int s = 0; s < 2; ++s) {
        auto& ps = state_.players.at(cur.players[s]);
        ps.rounds_played += 1;
        ps.score += rec.payoffs[s];
        if (ps.remaining_budget) *ps.remaining_budget -= 1;
        ps.seen_opponents.insert(cur.players[1 - s]);
        remaining[s] = ps.remaining_budget;
      }
      emit(EventKind::payoff, {{"match_id", cur.match_id},
                               {"round", rec.round_index},
                               {"payoffs", {rec.payoffs[0], rec.payoffs[1]}},
                               {"totals", {state_.player(cur.players[0]).score, state_.player(cur.players[1]).score}},
                               {"remaining", {nullable(remaining[0]), nullable(remaining[1])}}});

      if (const auto reason = check_termination(cur, input.exit_requested, remaining, config_.max_rounds)) {
        cur.end_reason = reason;
        break;
      }
    }

    MatchRecord done = std::move(*state_.current_match);
    state_.current_match.reset();
    emit(EventKind::match_end, {{"match_id", done.match_id},
                                {"reason", to_string(*done.end_reason)},
                                {"rounds", static_cast<int>(done.rounds.size())}});
    state_.completed_matches.push_back(done);
    ask_meta(done);
  }

  void ask_meta(const MatchRecord& match) {
    if (config_.meta.questions.empty()) return;
    for (const auto& p : match.players) {
      const PlayerView view = view_for(p, match, false);
      pending_side_ = {p, PromptKind::meta};
      const auto answers = agents_.at(p)->answer_meta(config_.meta.questions, match, view);
      pending_side_.reset();
      flush_exchanges(p);
      json ids = json::array(), values = json::array(), unparsed = json::array();
      for (const auto& a : answers) {
        ids.push_back(a.question_id);
        if (const bool* b = std::get_if<bool>(&a.value)) values.push_back(*b);
        else values.push_back(std::get<int>(a.value));
        unparsed.push_back(a.unparsed);
      }
      emit(EventKind::meta_qa, {{"match_id", match.match_id},
                                {"player", p.value},
                                {"total_score", view.total_score},
                                {"question_ids", ids},
                                {"answers", values},
                                {"unparsed", unparsed}});
    }
  }

  const TournamentConfig& config_;
  int trial_;
  TrialRecorder& recorder_;
  const ModelResources& resources_;
  TournamentState state_;
  std::map<PlayerId, std::unique_ptr<Agent>> agents_;
  std::optional<std::pair<PlayerId, PromptKind>> pending_side_;  // the single-agent call in flight
};

}  // namespace

std::vector<MatchRecord> TournamentState::matches_of(PlayerId p) const {
  std::vector<MatchRecord> out;
  for (const auto& m : completed_matches) {
    if (m.involves(p)) out.push_back(m);
  }
  if (current_match && current_match->involves(p)) out.push_back(*current_match);
  return out;
}

TournamentState initial_state(const TournamentConfig& config, std::uint64_t seed) {
  TournamentState s;
  s.config = config;
  s.seed = seed;
  s.schedule = build_schedule(config, seed);
  for (const auto& p : config.players) s.players[p].remaining_budget = config.round_budget;
  return s;
}

json config_echo(const TournamentConfig& config) {
  json j = to_json(config);
  j.erase("templates_dir");
  j["model"].erase("endpoint");
  return j;
}

TrialResult run_trial(const TournamentConfig& config, int trial, std::uint64_t seed, TrialRecorder& recorder,
                      const ModelResources& resources) {
  TrialRunner runner(config, trial, seed, recorder, resources);
  return runner.run();
}

std::vector<TrialResult> run_experiment(const TournamentConfig& config, const RecorderFactory& recorders,
                                        const ModelResources& resources, const ExperimentOptions& options) {
  if (config.trials < 1) throw ConfigError("trials must be at least 1");
  config.validate();
  validate_budget(config);

  auto one = [&](int i) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
    TrialResult result;
    try {
      auto recorder = recorders(i, seed);
      result = run_trial(config, i, seed, *recorder, resources);
    } catch (const LogError& e) {
      result.trial = i;
      result.seed = seed;
      result.status = TrialStatus::incomplete;
      result.failure = FailureKind::io;
      result.error = e.what();
    }
    if (options.on_trial_done) options.on_trial_done(result);
    return result;
  };

  std::vector<TrialResult> results;
  if (options.parallel_trials) {
    std::vector<std::future<TrialResult>> futures;
    for (int i = 0; i < config.trials; ++i) futures.push_back(std::async(std::launch::async, one, i));
    for (auto& f : futures) results.push_back(f.get());
  } else {
    for (int i = 0; i < config.trials; ++i) results.push_back(one(i));
  }
  return results;
}

ModelResources make_model_resources(const TournamentConfig& config) {
  return {std::make_shared<const PromptEngine>(PromptEngine::load(config.templates_dir)),
          std::make_shared<const ModelClient>(config.model)};
}

TournamentState replay_trial(const TournamentConfig& config, std::span<const Event> events) {
  if (events.empty() || events.front().kind != EventKind::trial_start) throw LogError("log does not open with trial_start");
  const auto& start = events.front().data;
  TournamentState s = initial_state(config, start.at("seed").get<std::uint64_t>());
  if (start.at("schedule") != [&] {
        json j = json::array();
        for (const auto& p : s.schedule) j.push_back(pairing_json(p));
        return j;
      }())
    throw LogError("logged schedule differs from the schedule rebuilt from the seed");

  const auto fail = [](const Event& e, const std::string& what) {
    return LogError("event " + std::to_string(e.seq) + ": " + what);
  };
  std::optional<RoundInput> pending;
  for (const auto& e : events) {
    s.event_cursor = e.seq;
    const auto& d = e.data;
    switch (e.kind) {
      case EventKind::trial_start:
      case EventKind::critique:
      case EventKind::meta_qa:
      case EventKind::model_exchange_ref:
      case EventKind::trial_end: break;
      case EventKind::match_start: {
        const int id = d.at("match_id").get<int>();
        if (id < 0 || id >= static_cast<int>(s.schedule.size())) throw fail(e, "match id outside the schedule");
        const Pairing& p = s.schedule[id];
        MatchRecord m;
        m.match_id = id;
        m.players = p.players;
        m.intra_group = p.intra_group;
        s.current_match = m;
        break;
      }
      case EventKind::plan: {
        auto& ps = s.players.at(PlayerId{d.at("player").get<int>()});
        const int round = d.at("global_round").get<int>();
        if (d.at("stage") == "draft") ps.planning_rounds.push_back(round);
        else ps.plan = Plan(d.at("text").get<std::string>(), round);
        break;
      }
      case EventKind::move_pair: {
        if (!s.current_match) throw fail(e, "move outside a match");
        RoundInput in;
        for (int i = 0; i < 2; ++i) {
          const auto a = action_from_letter(d.at("actions").at(i).get<std::string>());
          if (!a) throw fail(e, "bad action");
          in.actions[i] = *a;
          in.exit_requested[i] = d.at("end_match").at(i).get<bool>();
          in.opponent_masked[i] = d.at("masked").at(i).get<bool>();
          in.unparsed[i] = d.at("unparsed").at(i).get<bool>();
        }
        pending = in;
        break;
      }
      case EventKind::payoff: {
        if (!s.current_match || !pending) throw fail(e, "payoff without a preceding move_pair");
        MatchRecord& m = *s.current_match;
        const RoundRecord& r = m.append_round(*pending, config.matrix);
        pending.reset();
        if (d.at("round").get<int>() != r.round_index) throw fail(e, "round index mismatch");
        for (int i = 0; i < 2; ++i) {
          auto& ps = s.players.at(m.players[i]);
          ps.rounds_played += 1;
          ps.score += r.payoffs[i];
          if (ps.remaining_budget) *ps.remaining_budget -= 1;
          ps.seen_opponents.insert(m.players[1 - i]);
          if (d.at("payoffs").at(i).get<int>() != r.payoffs[i]) throw fail(e, "payoff differs from the matrix");
          if (d.at("totals").at(i).get<int>() != ps.score) throw fail(e, "running total differs");
          const auto& logged = d.at("remaining").at(i);
          if (logged.is_null() != !ps.remaining_budget || (ps.remaining_budget && logged.get<int>() != *ps.remaining_budget))
            throw fail(e, "remaining budget differs");
          if (ps.remaining_budget && *ps.remaining_budget < 0) throw fail(e, "budget overrun");
        }
        break;
      }
      case EventKind::match_end: {
        if (!s.current_match) throw fail(e, "match_end outside a match");
        MatchRecord m = std::move(*s.current_match);
        s.current_match.reset();
        const auto reason = end_reason_from_string(d.at("reason").get<std::string>());
        if (!reason) throw fail(e, "unknown end reason");
        if (*reason != EndReason::skipped) {
          std::array<bool, 2> exits{false, false};
          if (!m.rounds.empty()) exits = m.rounds.back().exit_requested;
          const RemainingBudget rem{s.player(m.players[0]).remaining_budget, s.player(m.players[1]).remaining_budget};
          if (check_termination(m, exits, rem, config.max_rounds) != reason) throw fail(e, "end reason differs");
        } else if (!m.rounds.empty()) {
          throw fail(e, "skipped match has rounds");
        }
        m.end_reason = reason;
        s.completed_matches.push_back(std::move(m));
        break;
      }
    }
  }
  return s;
}

}  // namespace ipd
