#include "ipd/scheduler.hpp"

#include <algorithm>
#include <sstream>

#include "ipd/errors.hpp"
#include "ipd/rng.hpp"

namespace ipd {

namespace {

constexpr std::uint64_t kScheduleSalt = 0x5c4ed01e;

bool plays(const TournamentConfig& config, PlayerId a, PlayerId b) {
  if (config.condition != Condition::GC) return true;
  return config.group_of(a) != config.group_of(b);
}

bool same_group(const TournamentConfig& config, PlayerId a, PlayerId b) {
  if (config.condition == Condition::RI) return false;
  auto ga = config.group_of(a);
  return ga && ga == config.group_of(b);
}

}  // namespace

std::string BudgetReport::describe() const {
  std::ostringstream out;
  for (const auto& [player, m] : matches_per_player) {
    out << "player " << player.value << ": m=" << m;
    if (round_budget) {
      const long long cap = static_cast<long long>(max_rounds) * m;
      out << ", N=" << *round_budget << (*round_budget < cap ? " < " : " >= ") << "n*m=" << cap
          << (*round_budget < cap ? " ok" : " VIOLATED");
    } else {
      out << ", no round budget";
    }
    out << '\n';
  }
  return out.str();
}

BudgetReport budget_report(const TournamentConfig& config) {
  BudgetReport report;
  report.max_rounds = config.max_rounds;
  report.round_budget = config.round_budget;
  for (const auto& p : config.players) {
    int m = 0;
    for (const auto& q : config.players) {
      if (p != q && plays(config, p, q)) ++m;
    }
    report.matches_per_player[p] = m;
    if (config.round_budget && !(*config.round_budget < static_cast<long long>(config.max_rounds) * m)) {
      report.satisfied = false;
    }
  }
  return report;
}

BudgetReport validate_budget(const TournamentConfig& config) {
  auto report = budget_report(config);
  if (!report.satisfied) {
    for (const auto& [player, m] : report.matches_per_player) {
      const long long cap = static_cast<long long>(config.max_rounds) * m;
      if (*config.round_budget >= cap) {
        std::ostringstream msg;
        msg << "round budget violates N < n*m for player " << player.value << ": N=" << *config.round_budget
            << ", n=" << config.max_rounds << ", m=" << m << " (n*m=" << cap << ")";
        throw BudgetConstraintError(msg.str());
      }
    }
  }
  return report;
}

std::vector<Pairing> build_schedule(const TournamentConfig& config, std::uint64_t seed) {
  config.validate();
  validate_budget(config);

  auto players = config.players;
  std::sort(players.begin(), players.end());
  std::vector<Pairing> schedule;
  for (std::size_t i = 0; i < players.size(); ++i) {
    for (std::size_t j = i + 1; j < players.size(); ++j) {
      if (!plays(config, players[i], players[j])) continue;
      schedule.push_back(Pairing{0, {players[i], players[j]}, same_group(config, players[i], players[j])});
    }
  }
  portable_shuffle(std::span<Pairing>(schedule), derive_seed(seed, kScheduleSalt));
  for (std::size_t k = 0; k < schedule.size(); ++k) schedule[k].ordinal = static_cast<int>(k);
  return schedule;
}

}  // namespace ipd
