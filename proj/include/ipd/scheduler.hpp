#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipd/config.hpp"

namespace ipd {

struct Pairing {
  int ordinal = 0;  // 0-based position in the trial's schedule
  std::array<PlayerId, 2> players{};  // ascending ids
  bool intra_group = false;

  bool operator==(const Pairing&) const = default;
};

/// Round-robin for RI and SA (C(h,2) pairings), cross-group only for GC
/// (sum over group pairs of |g_i|*|g_j|). Order is a seed-determined shuffle.
/// Throws ConfigError / BudgetConstraintError when the config is invalid.
std::vector<Pairing> build_schedule(const TournamentConfig& config, std::uint64_t seed);
inline std::vector<Pairing> build_schedule(const TournamentConfig& config) {
  return build_schedule(config, config.seed);
}

struct BudgetReport {
  std::map<PlayerId, int> matches_per_player;  // m
  int max_rounds = 0;                          // n
  std::optional<int> round_budget;             // N
  bool satisfied = true;                       // N < n*m for every player (or no N)

  std::string describe() const;  // one line per player: "player 3: m=5, N=40 < n*m=50 ok"
};

/// Per-player match count m and the N < n*m check. Throws BudgetConstraintError
/// naming N, n and m for the first violating player.
BudgetReport validate_budget(const TournamentConfig& config);

/// Same computation without throwing.
BudgetReport budget_report(const TournamentConfig& config);

}  // namespace ipd
