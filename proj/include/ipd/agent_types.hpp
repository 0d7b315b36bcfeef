#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ipd/config.hpp"
#include "ipd/game.hpp"

namespace ipd {

/// A long-term strategy statement. Never empty.
class Plan {
 public:
  /// Throws std::invalid_argument on blank text.
  Plan(std::string text, int created_at_round);
  const std::string& text() const { return text_; }
  int created_at_round() const { return created_at_round_; }
  bool operator==(const Plan&) const = default;

 private:
  std::string text_;
  int created_at_round_ = 0;
};

/// Feedback on a Plan. Never empty.
class Critique {
 public:
  explicit Critique(std::string text);
  const std::string& text() const { return text_; }
  bool operator==(const Critique&) const = default;

 private:
  std::string text_;
};

struct Decision {
  Action action = Action::A;
  bool end_match = false;  // the round still resolves, then the match ends
  std::string rationale;
  bool unparsed = false;  // model reply unusable after retries; action is the fallback

  bool operator==(const Decision&) const = default;
};

/// One round of the current match from the viewer's side.
struct ViewRound {
  Action own = Action::A;
  Action opponent = Action::A;
  int own_points = 0;
  int opponent_points = 0;
  bool operator==(const ViewRound&) const = default;
};

/// The slice of tournament state an agent may see when choosing a move:
/// only the rounds of the match being played, and no opponent identity while masked.
struct PlayerView {
  PlayerId self;
  std::optional<GroupId> self_group;         // absent under RI
  bool masked = false;
  std::optional<PlayerId> opponent;          // absent exactly when masked
  std::optional<GroupId> opponent_group;     // absent when masked or under RI
  std::optional<std::array<PlayerId, 2>> match_players;  // absent when masked
  int match_id = 0;
  std::vector<ViewRound> current_match_rounds;
  std::optional<int> remaining_budget;       // absent when hidden or uncapped
  int total_score = 0;
  int global_round = 1;                      // 1-based index of the round being decided
  Condition condition = Condition::SA;
  std::optional<Plan> current_plan;
};

/// What the planner and critic see: every match the player took part in.
struct PlanningContext {
  PlayerId self;
  std::optional<GroupId> self_group;
  Condition condition = Condition::SA;
  std::vector<MatchRecord> own_matches;  // completed plus the current one, in play order
  std::optional<int> remaining_budget;
  int total_score = 0;
  int global_round = 1;
};

using MetaValue = std::variant<bool, int>;

struct MetaAnswer {
  std::string question_id;
  MetaValue value = false;
  bool unparsed = false;  // excluded from accuracy scoring
  bool operator==(const MetaAnswer&) const = default;
};

}  // namespace ipd
