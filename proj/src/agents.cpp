#include "ipd/agents.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "ipd/errors.hpp"
#include "ipd/metrics.hpp"
#include "ipd/rng.hpp"

namespace ipd {

namespace {

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

Decision play(Action a, std::string why) { return {a, false, std::move(why), false}; }

constexpr const char* kFallbackPlan = "No plan available yet; decide each round from the current match.";

}  // namespace

Plan::Plan(std::string text, int created_at_round) : text_(std::move(text)), created_at_round_(created_at_round) {
  if (blank(text_)) throw std::invalid_argument("plan text is empty");
}

Critique::Critique(std::string text) : text_(std::move(text)) {
  if (blank(text_)) throw std::invalid_argument("critique text is empty");
}

Plan ScriptedAgent::make_plan(const PlanningContext& ctx, const std::optional<Plan>&, const std::optional<Critique>&) {
  return Plan(plan_stub_, ctx.global_round);
}

Critique ScriptedAgent::critique_plan(const Plan&, const PlanningContext&) {
  return Critique("The plan is fixed by the strategy; no changes.");
}

std::vector<MetaAnswer> ScriptedAgent::answer_meta(std::span<const MetaQuestion> questions, const MatchRecord& match,
                                                   const PlayerView& view) {
  MetaConfig asked = meta_;
  asked.questions.assign(questions.begin(), questions.end());
  const auto truth = meta_ground_truth(match, view.self, view.total_score, asked);
  std::vector<MetaAnswer> out;
  out.reserve(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    MetaValue v = questions[i].answer == MetaQuestion::Answer::integer ? MetaValue{0} : MetaValue{false};
    if (truth[i]) v = *truth[i];
    if (mode_ == MetaAnswerMode::inverted) {
      if (auto* b = std::get_if<bool>(&v)) v = !*b;
      else v = std::get<int>(v) + 1;
    }
    out.push_back({questions[i].id, v, false});
  }
  return out;
}

AlwaysCooperate::AlwaysCooperate(MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Always play action_a.", std::move(meta), mode) {}

Decision AlwaysCooperate::decide(const PlayerView&) { return play(Action::A, "always action_a"); }

AlwaysDefect::AlwaysDefect(MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Always play action_b.", std::move(meta), mode) {}

Decision AlwaysDefect::decide(const PlayerView&) { return play(Action::B, "always action_b"); }

TitForTat::TitForTat(MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Open with action_a, then mirror the opponent's previous action.", std::move(meta), mode) {}

Decision TitForTat::decide(const PlayerView& view) {
  if (view.current_match_rounds.empty()) return play(Action::A, "opening move");
  return play(view.current_match_rounds.back().opponent, "mirror opponent");
}

GrimTrigger::GrimTrigger(MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Play action_a until the opponent plays action_b, then play action_b for the rest of the match.",
                    std::move(meta), mode) {}

Decision GrimTrigger::decide(const PlayerView& view) {
  const bool triggered = std::any_of(view.current_match_rounds.begin(), view.current_match_rounds.end(),
                                     [](const ViewRound& r) { return r.opponent == Action::B; });
  return triggered ? play(Action::B, "triggered") : play(Action::A, "not triggered");
}

RandomAgent::RandomAgent(double a_probability, std::uint64_t seed, MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Pick action_a at random with a fixed probability.", std::move(meta), mode),
      a_probability_(a_probability),
      seed_(seed) {
  if (!(a_probability >= 0.0 && a_probability <= 1.0)) throw std::invalid_argument("a_probability outside [0, 1]");
}

Decision RandomAgent::decide(const PlayerView& view) {
  const double u = unit_interval(derive_seed(seed_, static_cast<std::uint64_t>(view.global_round)));
  return play(u < a_probability_ ? Action::A : Action::B, "random draw");
}

ExitAfterRound::ExitAfterRound(int exit_round, Action action, MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Leave every match after round " + std::to_string(exit_round) + ".", std::move(meta), mode),
      exit_round_(exit_round),
      action_(action) {
  if (exit_round < 1) throw std::invalid_argument("exit_round must be at least 1");
}

Decision ExitAfterRound::decide(const PlayerView& view) {
  Decision d = play(action_, "fixed action");
  d.end_match = static_cast<int>(view.current_match_rounds.size()) + 1 >= exit_round_;
  return d;
}

Parochial::Parochial(MetaConfig meta, MetaAnswerMode mode)
    : ScriptedAgent("Play action_a with my own group and action_b with everyone else.", std::move(meta), mode) {}

Decision Parochial::decide(const PlayerView& view) {
  if (view.self_group && view.opponent_group && *view.self_group == *view.opponent_group)
    return play(Action::A, "same group");
  return play(Action::B, "other or unknown group");
}

ModelAgent::ModelAgent(PlayerId self, std::shared_ptr<const PromptEngine> prompts,
                       std::shared_ptr<const ModelClient> client, const TournamentConfig& config)
    : self_(self), prompts_(std::move(prompts)), client_(std::move(client)), config_(config) {
  if (!prompts_ || !client_) throw std::invalid_argument("model agent needs prompts and a client");
}

RenderedPrompt ModelAgent::move_prompt(const PlayerView& view) const { return prompts_->render_move(view, config_); }

void ModelAgent::check_move(const std::string& reply) { parse_move_reply(reply); }

Decision ModelAgent::interpret_move(const Completion& completion) {
  if (completion.malformed) return {Action::B, false, "", true};
  const MoveReply r = parse_move_reply(completion.text);
  return {r.action, r.end_match, r.reasoning, false};
}

void ModelAgent::record(PromptKind kind, const Completion& completion) {
  for (const auto& ex : completion.exchanges) pending_.push_back({kind, ex});
}

std::vector<AgentExchange> ModelAgent::take_exchanges() { return std::exchange(pending_, {}); }

Decision ModelAgent::accept_move(const Completion& completion) {
  record(PromptKind::move, completion);
  return interpret_move(completion);
}

Decision ModelAgent::decide(const PlayerView& view) {
  return accept_move(client_->complete(move_prompt(view).text, check_move));
}

Plan ModelAgent::make_plan(const PlanningContext& ctx, const std::optional<Plan>& previous,
                           const std::optional<Critique>& critique) {
  const auto prompt = prompts_->render_plan(ctx, previous, critique, config_);
  const auto completion = client_->complete(prompt.text, [](const std::string& r) { parse_plan_reply(r); });
  record(PromptKind::plan, completion);
  if (completion.malformed) return previous ? *previous : Plan(kFallbackPlan, ctx.global_round);
  return Plan(parse_plan_reply(completion.text).plan, ctx.global_round);
}

Critique ModelAgent::critique_plan(const Plan& plan, const PlanningContext& ctx) {
  const auto prompt = prompts_->render_critique(ctx, plan, config_);
  const auto completion = client_->complete(prompt.text, [](const std::string& r) { parse_critique_reply(r); });
  record(PromptKind::critique, completion);
  if (completion.malformed) return Critique("No feedback.");
  return Critique(parse_critique_reply(completion.text).feedback);
}

std::vector<MetaAnswer> ModelAgent::answer_meta(std::span<const MetaQuestion> questions, const MatchRecord& match,
                                                const PlayerView& view) {
  const auto prompt = prompts_->render_meta(match, self_, view.total_score, questions, config_);
  const auto completion =
      client_->complete(prompt.text, [questions](const std::string& r) { parse_meta_reply(r, questions); });
  record(PromptKind::meta, completion);
  std::vector<MetaAnswer> out;
  out.reserve(questions.size());
  if (completion.malformed) {
    for (const auto& q : questions) out.push_back({q.id, false, true});
    return out;
  }
  const auto reply = parse_meta_reply(completion.text, questions);
  for (std::size_t i = 0; i < questions.size(); ++i) out.push_back({questions[i].id, reply.answers[i], false});
  return out;
}

std::unique_ptr<Agent> make_agent(PlayerId player, const TournamentConfig& config, std::uint64_t trial_seed,
                                  const ModelResources& resources) {
  const AgentBinding& b = config.binding(player);
  const MetaConfig& meta = config.meta;
  switch (b.kind) {
    case AgentKind::always_cooperate: return std::make_unique<AlwaysCooperate>(meta, b.meta_mode);
    case AgentKind::always_defect: return std::make_unique<AlwaysDefect>(meta, b.meta_mode);
    case AgentKind::tit_for_tat: return std::make_unique<TitForTat>(meta, b.meta_mode);
    case AgentKind::grim_trigger: return std::make_unique<GrimTrigger>(meta, b.meta_mode);
    case AgentKind::random:
      return std::make_unique<RandomAgent>(
          b.a_probability, derive_seed(trial_seed, 0xa6e47000ULL + static_cast<std::uint64_t>(player.value)), meta,
          b.meta_mode);
    case AgentKind::exit_after: return std::make_unique<ExitAfterRound>(b.exit_round, b.exit_action, meta, b.meta_mode);
    case AgentKind::parochial: return std::make_unique<Parochial>(meta, b.meta_mode);
    case AgentKind::model:
      return std::make_unique<ModelAgent>(player, resources.prompts, resources.client, config);
  }
  throw std::logic_error("unhandled agent kind");
}

}  // namespace ipd
