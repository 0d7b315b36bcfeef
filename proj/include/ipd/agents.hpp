#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipd/agent_types.hpp"
#include "ipd/config.hpp"
#include "ipd/model_client.hpp"
#include "ipd/prompting.hpp"

namespace ipd {

/// A player's behaviour. One instance per player per trial; an instance is
/// never queried from two threads at once.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string_view name() const = 0;
  virtual bool model_backed() const { return false; }

  virtual Decision decide(const PlayerView& view) = 0;
  virtual Plan make_plan(const PlanningContext& ctx, const std::optional<Plan>& previous,
                         const std::optional<Critique>& critique) = 0;
  virtual Critique critique_plan(const Plan& plan, const PlanningContext& ctx) = 0;
  /// One answer per question, in question order. `match` must be finished.
  virtual std::vector<MetaAnswer> answer_meta(std::span<const MetaQuestion> questions, const MatchRecord& match,
                                              const PlayerView& view) = 0;
};

/// Scripted strategies: deterministic in the view (plus a seed for Random),
/// fixed stub plans, and meta answers computed from the match log.
class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(std::string plan_stub, MetaConfig meta, MetaAnswerMode mode)
      : plan_stub_(std::move(plan_stub)), meta_(std::move(meta)), mode_(mode) {}

  Plan make_plan(const PlanningContext& ctx, const std::optional<Plan>& previous,
                 const std::optional<Critique>& critique) override;
  Critique critique_plan(const Plan& plan, const PlanningContext& ctx) override;
  std::vector<MetaAnswer> answer_meta(std::span<const MetaQuestion> questions, const MatchRecord& match,
                                      const PlayerView& view) override;

 private:
  std::string plan_stub_;
  MetaConfig meta_;
  MetaAnswerMode mode_;
};

class AlwaysCooperate final : public ScriptedAgent {
 public:
  explicit AlwaysCooperate(MetaConfig meta = MetaConfig::defaults(), MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "always_cooperate"; }
  Decision decide(const PlayerView& view) override;
};

class AlwaysDefect final : public ScriptedAgent {
 public:
  explicit AlwaysDefect(MetaConfig meta = MetaConfig::defaults(), MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "always_defect"; }
  Decision decide(const PlayerView& view) override;
};

/// A first, then the opponent's previous action.
class TitForTat final : public ScriptedAgent {
 public:
  explicit TitForTat(MetaConfig meta = MetaConfig::defaults(), MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "tit_for_tat"; }
  Decision decide(const PlayerView& view) override;
};

/// A until the opponent plays B, then B for the rest of the match.
class GrimTrigger final : public ScriptedAgent {
 public:
  explicit GrimTrigger(MetaConfig meta = MetaConfig::defaults(), MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "grim_trigger"; }
  Decision decide(const PlayerView& view) override;
};

/// A with probability p, drawn from (seed, global round) so the choice is a pure function of the view.
class RandomAgent final : public ScriptedAgent {
 public:
  RandomAgent(double a_probability, std::uint64_t seed, MetaConfig meta = MetaConfig::defaults(),
              MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "random"; }
  Decision decide(const PlayerView& view) override;

 private:
  double a_probability_;
  std::uint64_t seed_;
};

/// Plays a fixed action and asks to leave every match after round `exit_round`.
class ExitAfterRound final : public ScriptedAgent {
 public:
  ExitAfterRound(int exit_round, Action action, MetaConfig meta = MetaConfig::defaults(),
                 MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "exit_after"; }
  Decision decide(const PlayerView& view) override;

 private:
  int exit_round_;
  Action action_;
};

/// A against players of its own group, B against everyone else (and against unknown opponents).
class Parochial final : public ScriptedAgent {
 public:
  explicit Parochial(MetaConfig meta = MetaConfig::defaults(), MetaAnswerMode mode = MetaAnswerMode::truth);
  std::string_view name() const override { return "parochial"; }
  Decision decide(const PlayerView& view) override;
};

/// Exchanges produced by one model-backed agent call, drained by the tournament.
struct AgentExchange {
  PromptKind kind = PromptKind::move;
  ModelExchange exchange;
};

/// Language-model player: renders the prompt, queries the backend, parses the reply.
/// Replies that stay unparseable after the client's retries fall back to action B
/// without exit (moves), the previous plan (plans), or unparsed meta answers.
class ModelAgent final : public Agent {
 public:
  ModelAgent(PlayerId self, std::shared_ptr<const PromptEngine> prompts, std::shared_ptr<const ModelClient> client,
             const TournamentConfig& config);

  std::string_view name() const override { return "model"; }
  bool model_backed() const override { return true; }
  const ModelClient& client() const { return *client_; }

  Decision decide(const PlayerView& view) override;
  Plan make_plan(const PlanningContext& ctx, const std::optional<Plan>& previous,
                 const std::optional<Critique>& critique) override;
  Critique critique_plan(const Plan& plan, const PlanningContext& ctx) override;
  std::vector<MetaAnswer> answer_meta(std::span<const MetaQuestion> questions, const MatchRecord& match,
                                      const PlayerView& view) override;

  /// Pieces of decide() for callers that batch both players into one complete_pair.
  RenderedPrompt move_prompt(const PlayerView& view) const;
  static void check_move(const std::string& reply);
  static Decision interpret_move(const Completion& completion);
  /// Records the exchanges of a batched move completion and interprets it.
  Decision accept_move(const Completion& completion);

  /// Exchanges recorded since the last call, in order.
  std::vector<AgentExchange> take_exchanges();

 private:
  void record(PromptKind kind, const Completion& completion);

  PlayerId self_;
  std::shared_ptr<const PromptEngine> prompts_;
  std::shared_ptr<const ModelClient> client_;
  const TournamentConfig& config_;
  std::vector<AgentExchange> pending_;
};

/// Shared resources for model-backed agents.
struct ModelResources {
  std::shared_ptr<const PromptEngine> prompts;
  std::shared_ptr<const ModelClient> client;
};

/// Builds the agent bound to `player`. `trial_seed` seeds Random agents.
std::unique_ptr<Agent> make_agent(PlayerId player, const TournamentConfig& config, std::uint64_t trial_seed,
                                  const ModelResources& resources);

}  // namespace ipd
