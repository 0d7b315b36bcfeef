#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipd/game.hpp"
#include "ipd/model_client.hpp"

namespace ipd {

/// Repeated interactions, group competition, super-additive.
enum class Condition { RI, GC, SA };

std::string_view to_string(Condition c);  // "ri" / "gc" / "sa"
std::optional<Condition> condition_from_string(std::string_view s);

enum class AgentKind {
  always_cooperate,
  always_defect,
  tit_for_tat,
  grim_trigger,
  random,
  exit_after,  // test strategy: leaves every match after a fixed round
  parochial,   // test strategy: A against its own group, B otherwise
  model,
};

std::string_view to_string(AgentKind k);
std::optional<AgentKind> agent_kind_from_string(std::string_view s);

/// How scripted agents answer post-match questions.
enum class MetaAnswerMode { truth, inverted };

struct AgentBinding {
  AgentKind kind = AgentKind::model;
  double a_probability = 0.5;  // random
  int exit_round = 1;          // exit_after
  Action exit_action = Action::A;
  MetaAnswerMode meta_mode = MetaAnswerMode::truth;

  bool operator==(const AgentBinding&) const = default;
};

struct MetaQuestion {
  enum class Answer { yes_no, integer };
  std::string id;
  std::string text;
  Answer answer = Answer::yes_no;
};

/// Post-match questions and the ground-truth thresholds used to score them.
struct MetaConfig {
  std::vector<MetaQuestion> questions;
  double tft_threshold = 0.75;       // strategy: share of rounds matching the TFT prediction
  double forgiving_threshold = 0.25; // behavior: share of A replies after our B (strictly above)

  static MetaQuestion strategy_question();
  static MetaQuestion behavior_question();
  static MetaQuestion total_score_question();
  static MetaConfig defaults();  // strategy + behavior
};

struct TournamentConfig {
  Condition condition = Condition::SA;
  std::vector<PlayerId> players;
  std::map<PlayerId, GroupId> groups;
  int max_rounds = 10;               // n
  std::optional<int> round_budget;   // N; nullopt: no per-player cap
  int planning_interval = 5;         // K
  int trials = 5;
  std::uint64_t seed = 0;
  PayoffMatrix matrix;
  std::string matrix_name = "prompt_default";
  std::map<PlayerId, AgentBinding> agents;  // total over players
  ModelConfig model;
  MetaConfig meta = MetaConfig::defaults();
  bool mask_first_round = true;
  bool show_remaining_budget = true;
  std::string templates_dir;  // empty: the templates compiled into the binary

  std::optional<GroupId> group_of(PlayerId p) const;
  const AgentBinding& binding(PlayerId p) const;
  bool uses_model() const;
  int player_count() const { return static_cast<int>(players.size()); }

  /// Structural checks (counts, ids, group coverage, matrix ordering).
  /// The N < n*m check lives in validate_budget. Throws ConfigError.
  void validate() const;
};

/// Six players in two groups of three, all bound to `kind`.
TournamentConfig make_two_group_config(Condition c, AgentKind kind, int n, std::optional<int> budget,
                                       int trials = 1, std::uint64_t seed = 0);

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<Condition> condition;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
};

/// Loads a YAML config. Endpoint/model come from the file, then IPD_ENDPOINT /
/// IPD_MODEL, then `overrides`. The `conditions:` block supplies per-condition
/// n / N / K / trials after the condition is resolved.
TournamentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
TournamentConfig parse_config(const std::string& yaml_text, const ConfigOverrides& overrides = {});

nlohmann::json to_json(const TournamentConfig& config);
nlohmann::json to_json(const ConfigOverrides& overrides);

/// Inverse of to_json(TournamentConfig); missing model/template keys keep their defaults.
/// Throws ConfigError on a malformed echo.
TournamentConfig config_from_json(const nlohmann::json& j);

}  // namespace ipd
