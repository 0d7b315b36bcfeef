#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ipd {

/// The two stage-game choices. A carries cooperate semantics, B defect
/// semantics; agents only ever see them as "action_a" / "action_b".
enum class Action : std::uint8_t { A, B };

constexpr bool is_cooperative(Action a) { return a == Action::A; }

std::string_view to_token(Action a);  // "action_a" / "action_b"
char to_letter(Action a);             // 'A' / 'B'
std::optional<Action> action_from_token(std::string_view token);
std::optional<Action> action_from_letter(std::string_view letter);

struct PlayerId {
  int value = 0;
  auto operator<=>(const PlayerId&) const = default;
};

struct GroupId {
  int value = 0;
  auto operator<=>(const GroupId&) const = default;
};

/// Stage-game rewards. Symmetric by construction: a player's points depend
/// only on its own action and the opponent's action.
struct PayoffMatrix {
  int mutual_a = 3;  // both play A
  int lone_a = 0;    // A against B (sucker)
  int lone_b = 5;    // B against A (temptation)
  int mutual_b = 1;  // both play B

  /// The rewards shown to agents in the game rules (3,3 / 0,5 / 5,0 / 1,1).
  static PayoffMatrix prompt_default() { return {}; }
  /// The textbook table (3,3 / -1,5 / 5,-1 / 0,0).
  static PayoffMatrix table_preset() { return {3, -1, 5, 0}; }

  /// temptation > mutual A > mutual B > sucker
  bool is_prisoners_dilemma() const {
    return lone_b > mutual_a && mutual_a > mutual_b && mutual_b > lone_a;
  }

  bool operator==(const PayoffMatrix&) const = default;
};

/// Points for (first, second) given their simultaneous actions.
std::array<int, 2> resolve_round(Action first, Action second, const PayoffMatrix& matrix);

enum class EndReason { round_limit, player_exit, budget_exhausted, skipped };

std::string_view to_string(EndReason reason);
std::optional<EndReason> end_reason_from_string(std::string_view s);

struct RoundRecord {
  int match_id = 0;
  int round_index = 0;  // 1-based, contiguous within a match
  std::array<Action, 2> actions{Action::A, Action::A};
  std::array<int, 2> payoffs{0, 0};
  std::array<bool, 2> exit_requested{false, false};
  std::array<bool, 2> opponent_masked{false, false};
  std::array<bool, 2> unparsed{false, false};

  bool operator==(const RoundRecord&) const = default;
};

/// Per-side inputs of one round, before payoffs are attached.
struct RoundInput {
  std::array<Action, 2> actions{Action::A, Action::A};
  std::array<bool, 2> exit_requested{false, false};
  std::array<bool, 2> opponent_masked{false, false};
  std::array<bool, 2> unparsed{false, false};
};

struct MatchRecord {
  int match_id = 0;
  std::array<PlayerId, 2> players{};
  bool intra_group = false;
  std::vector<RoundRecord> rounds;
  std::optional<EndReason> end_reason;

  bool involves(PlayerId p) const { return players[0] == p || players[1] == p; }
  /// 0 or 1; throws std::invalid_argument if p did not play this match.
  int side_of(PlayerId p) const;
  PlayerId opponent_of(PlayerId p) const { return players[1 - side_of(p)]; }
  bool finished() const { return end_reason.has_value(); }

  /// Resolves the round against `matrix` and appends it with the next index.
  const RoundRecord& append_round(const RoundInput& input, const PayoffMatrix& matrix);

  bool operator==(const MatchRecord&) const = default;
};

/// Remaining rounds per side; nullopt means the player has no budget cap.
using RemainingBudget = std::array<std::optional<int>, 2>;

/// Decides whether the match ends after the rounds recorded so far.
/// Precedence: budget_exhausted > round_limit > player_exit.
std::optional<EndReason> check_termination(const MatchRecord& match,
                                           std::array<bool, 2> exit_flags,
                                           const RemainingBudget& remaining,
                                           int max_rounds);

}  // namespace ipd
