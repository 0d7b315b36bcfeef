#include "ipd/game.hpp"

#include <stdexcept>

namespace ipd {

std::string_view to_token(Action a) { return a == Action::A ? "action_a" : "action_b"; }

char to_letter(Action a) { return a == Action::A ? 'A' : 'B'; }

std::optional<Action> action_from_token(std::string_view token) {
  if (token == "action_a") return Action::A;
  if (token == "action_b") return Action::B;
  return std::nullopt;
}

std::optional<Action> action_from_letter(std::string_view letter) {
  if (letter == "A") return Action::A;
  if (letter == "B") return Action::B;
  return std::nullopt;
}

std::array<int, 2> resolve_round(Action first, Action second, const PayoffMatrix& m) {
  if (first == Action::A && second == Action::A) return {m.mutual_a, m.mutual_a};
  if (first == Action::B && second == Action::B) return {m.mutual_b, m.mutual_b};
  if (first == Action::A) return {m.lone_a, m.lone_b};
  return {m.lone_b, m.lone_a};
}

std::string_view to_string(EndReason reason) {
  switch (reason) {
    case EndReason::round_limit: return "round_limit";
    case EndReason::player_exit: return "player_exit";
    case EndReason::budget_exhausted: return "budget_exhausted";
    case EndReason::skipped: return "skipped";
  }
  return "unknown";
}

std::optional<EndReason> end_reason_from_string(std::string_view s) {
  for (auto r : {EndReason::round_limit, EndReason::player_exit, EndReason::budget_exhausted,
                 EndReason::skipped}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

int MatchRecord::side_of(PlayerId p) const {
  if (players[0] == p) return 0;
  if (players[1] == p) return 1;
  throw std::invalid_argument("player " + std::to_string(p.value) + " is not in match " +
                              std::to_string(match_id));
}

const RoundRecord& MatchRecord::append_round(const RoundInput& input, const PayoffMatrix& matrix) {
  if (finished()) throw std::logic_error("append_round on a finished match");
  RoundRecord r;
  r.match_id = match_id;
  r.round_index = static_cast<int>(rounds.size()) + 1;
  r.actions = input.actions;
  r.payoffs = resolve_round(input.actions[0], input.actions[1], matrix);
  r.exit_requested = input.exit_requested;
  r.opponent_masked = input.opponent_masked;
  r.unparsed = input.unparsed;
  rounds.push_back(r);
  return rounds.back();
}

std::optional<EndReason> check_termination(const MatchRecord& match, std::array<bool, 2> exit_flags,
                                           const RemainingBudget& remaining, int max_rounds) {
  for (const auto& b : remaining) {
    if (b && *b <= 0) return EndReason::budget_exhausted;
  }
  const auto played = static_cast<int>(match.rounds.size());
  if (played >= max_rounds) return EndReason::round_limit;
  if (exit_flags[0] || exit_flags[1]) return EndReason::player_exit;
  return std::nullopt;
}

}  // namespace ipd
