#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipd/agents.hpp"
#include "ipd/config.hpp"
#include "ipd/event_log.hpp"
#include "ipd/scheduler.hpp"

namespace ipd {

struct PlayerState {
  std::optional<int> remaining_budget;  // N minus rounds played; absent when uncapped
  int rounds_played = 0;                // global round counter
  int score = 0;
  std::optional<Plan> plan;
  std::set<PlayerId> seen_opponents;
  std::vector<int> planning_rounds;  // global rounds (1-based) before which planning ran

  bool operator==(const PlayerState&) const = default;
};

struct TournamentState {
  TournamentConfig config;
  std::uint64_t seed = 0;
  std::vector<Pairing> schedule;
  std::vector<MatchRecord> completed_matches;
  std::optional<MatchRecord> current_match;
  std::map<PlayerId, PlayerState> players;
  std::int64_t event_cursor = 0;  // seq of the last event emitted or replayed

  const PlayerState& player(PlayerId p) const { return players.at(p); }
  /// Completed matches plus the current one that involve `p`, in play order.
  std::vector<MatchRecord> matches_of(PlayerId p) const;
};

/// Fresh state: schedule built, budgets at N, no plans. Validates the config.
TournamentState initial_state(const TournamentConfig& config, std::uint64_t seed);

enum class TrialStatus { complete, incomplete };
enum class FailureKind { none, backend, io, other };

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  TournamentState state;
  TrialStatus status = TrialStatus::complete;
  FailureKind failure = FailureKind::none;
  std::string error;
};

/// The config as echoed into trial_start: everything except the endpoint and
/// template directory, so reruns against another backend address log identically.
nlohmann::json config_echo(const TournamentConfig& config);

/// Plays one trial in schedule order and records it to `recorder`. Backend and
/// I/O failures end the trial early with status incomplete (trial_end is still
/// written when the recorder allows it); they are not rethrown.
TrialResult run_trial(const TournamentConfig& config, int trial, std::uint64_t seed, TrialRecorder& recorder,
                      const ModelResources& resources);

using RecorderFactory = std::function<std::unique_ptr<TrialRecorder>(int trial, std::uint64_t seed)>;

struct ExperimentOptions {
  bool parallel_trials = false;
  /// Called after each trial, from the thread that ran it.
  std::function<void(const TrialResult&)> on_trial_done;
};

/// Runs config.trials independent trials with seeds seed+0, seed+1, ...; every
/// trial gets fresh agents. A failed trial does not stop the others.
std::vector<TrialResult> run_experiment(const TournamentConfig& config, const RecorderFactory& recorders,
                                        const ModelResources& resources, const ExperimentOptions& options = {});

/// Prompt engine from config.templates_dir and an HTTP client for config.model.
ModelResources make_model_resources(const TournamentConfig& config);

/// Rebuilds the final state from a trial's events, recomputing every payoff and
/// budget with the game engine. Throws LogError when the log disagrees with the engine.
TournamentState replay_trial(const TournamentConfig& config, std::span<const Event> events);

}  // namespace ipd
