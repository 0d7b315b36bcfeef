#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipd/agent_types.hpp"
#include "ipd/config.hpp"
#include "ipd/mock_backend.hpp"
#include "ipd/model_client.hpp"

namespace ipd::testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return IPD_SOURCE_DIR; }
inline fs::path config_path(const std::string& name) { return source_dir() / "configs" / name; }

/// Fresh, empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const fs::path dir = fs::temp_directory_path() / ("ipd-" + tag + "-" + std::to_string(rng() % 1000000000));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct CliResult {
  int code = -1;
  std::string out;
};

/// Runs the ipd binary with `args` (already shell-quoted), capturing stdout and stderr.
inline CliResult run_cli(const std::string& args) {
  const fs::path log = scratch_dir("cli") / "output.txt";
  const std::string cmd = std::string("\"") + IPD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(log);
  fs::remove_all(log.parent_path());
  return r;
}

/// Answers like the mock backend and keeps every prompt it was sent.
class CapturingTransport final : public Transport {
 public:
  explicit CapturingTransport(MockOptions options = {}) : inner_(make_mock_transport(options)) {}

  HttpResult post(const std::string& path, const std::string& body, double timeout_s) override {
    const auto req = nlohmann::json::parse(body);
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(req.at("messages").back().at("content").get<std::string>());
    }
    return inner_->post(path, body, timeout_s);
  }
  HttpResult get(const std::string& path, double timeout_s) override { return inner_->get(path, timeout_s); }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }

 private:
  std::shared_ptr<Transport> inner_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

/// Counts recomputed straight from raw event-log JSON, without the analysis code.
struct Recount {
  struct Counts {
    int a = 0;
    int total = 0;
    double rate() const { return static_cast<double>(a) / total; }
  };
  // keyed by (trial, player)
  std::map<std::pair<int, int>, Counts> rounds;
  std::map<std::pair<int, int>, Counts> first_moves;
  std::map<std::pair<int, int>, Counts> intra;
  std::map<std::pair<int, int>, Counts> inter;
  std::map<std::pair<int, int>, int> score;
};

inline void recount_log(const std::string& jsonl, Recount& out) {
  std::istringstream in(jsonl);
  int trial = -1;
  std::array<int, 2> players{};
  bool intra = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto e = nlohmann::json::parse(line);
    const auto kind = e.at("kind").get<std::string>();
    const auto& d = e.at("data");
    if (kind == "trial_start") trial = d.at("trial").get<int>();
    if (kind == "match_start") {
      players = {d.at("players")[0].get<int>(), d.at("players")[1].get<int>()};
      intra = d.at("intra_group").get<bool>();
    }
    if (kind == "move_pair") {
      for (int s = 0; s < 2; ++s) {
        const bool a = d.at("actions")[s].get<std::string>() == "A";
        const std::pair key{trial, players[s]};
        auto bump = [&](Recount::Counts& c) {
          c.a += a ? 1 : 0;
          c.total += 1;
        };
        bump(out.rounds[key]);
        if (d.at("round").get<int>() == 1) bump(out.first_moves[key]);
        bump(intra ? out.intra[key] : out.inter[key]);
      }
    }
    if (kind == "payoff") {
      for (int s = 0; s < 2; ++s) out.score[{trial, players[s]}] += d.at("payoffs")[s].get<int>();
    }
  }
}

/// Splits CSV text into rows of fields (no quoting in the exported files).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

/// Six scripted players of random kinds in two groups of three.
inline TournamentConfig random_scripted_config(std::uint64_t seed, Condition condition) {
  std::mt19937_64 rng(seed);
  const int n = 3 + static_cast<int>(rng() % 8);
  const int m = condition == Condition::GC ? 3 : 5;
  const int budget = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n * m - 1));
  TournamentConfig c = make_two_group_config(condition, AgentKind::always_cooperate, n, budget, 1, seed);
  c.mask_first_round = rng() % 2 == 0;
  c.planning_interval = 1 + static_cast<int>(rng() % 6);
  const AgentKind kinds[] = {AgentKind::always_cooperate, AgentKind::always_defect, AgentKind::tit_for_tat,
                             AgentKind::grim_trigger,     AgentKind::random,        AgentKind::exit_after,
                             AgentKind::parochial};
  for (auto& [p, b] : c.agents) {
    b.kind = kinds[rng() % std::size(kinds)];
    b.a_probability = static_cast<double>(rng() % 101) / 100.0;
    b.exit_round = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    b.exit_action = rng() % 2 ? Action::A : Action::B;
  }
  return c;
}

/// A finished or in-progress match between `a` and `b` with random play.
inline MatchRecord random_match(std::mt19937_64& rng, int id, PlayerId a, PlayerId b, int max_rounds,
                                const PayoffMatrix& matrix, bool finish) {
  MatchRecord m;
  m.match_id = id;
  m.players = {std::min(a, b), std::max(a, b)};
  const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(max_rounds + 1));
  for (int i = 0; i < k; ++i) {
    RoundInput in;
    in.actions = {rng() % 2 ? Action::A : Action::B, rng() % 2 ? Action::A : Action::B};
    m.append_round(in, matrix);
  }
  if (finish) m.end_reason = k == max_rounds ? EndReason::round_limit : EndReason::player_exit;
  return m;
}

/// Plan text drawn from a neutral vocabulary.
inline std::string random_plan_text(std::mt19937_64& rng) {
  static const char* words[] = {"play", "action_a", "action_b", "first", "then", "repeat", "opponent", "match",
                                "end", "early", "budget", "group", "score", "keep", "switch", "after"};
  std::string out;
  const int n = 3 + static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) out += std::string(i ? " " : "") + words[rng() % std::size(words)];
  return out;
}

/// Random but consistent game state from `self`'s side: some finished matches
/// and a current one, with random budget, masking and plan.
struct RandomState {
  TournamentConfig config;
  PlayerView view;
  PlanningContext context;
  std::optional<Plan> plan;
  std::optional<Critique> critique;
};

inline RandomState random_state(std::mt19937_64& rng) {
  const Condition conds[] = {Condition::RI, Condition::GC, Condition::SA};
  RandomState s;
  const Condition c = conds[rng() % 3];
  const int n = 1 + static_cast<int>(rng() % 10);
  const int m = c == Condition::GC ? 3 : 5;
  std::optional<int> budget;
  if (rng() % 4) budget = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n * m - 1 > 0 ? n * m - 1 : 1));
  if (budget && *budget >= n * m) budget.reset();
  s.config = make_two_group_config(c, AgentKind::model, n, budget);
  s.config.matrix = rng() % 2 ? PayoffMatrix::prompt_default() : PayoffMatrix::table_preset();
  s.config.show_remaining_budget = rng() % 2;

  const PlayerId self{static_cast<int>(rng() % 6)};
  std::vector<PlayerId> opponents;
  for (const auto& p : s.config.players) {
    if (p == self) continue;
    if (c == Condition::GC && s.config.group_of(p) == s.config.group_of(self)) continue;
    opponents.push_back(p);
  }
  std::shuffle(opponents.begin(), opponents.end(), rng);
  const int done = static_cast<int>(rng() % opponents.size());
  int score = 0;
  int played = 0;
  for (int i = 0; i <= done; ++i) {
    auto match = random_match(rng, i, self, opponents[static_cast<std::size_t>(i)], n, s.config.matrix, i < done);
    const int side = match.side_of(self);
    for (const auto& r : match.rounds) score += r.payoffs[static_cast<std::size_t>(side)];
    played += static_cast<int>(match.rounds.size());
    s.context.own_matches.push_back(std::move(match));
  }
  const auto& current = s.context.own_matches.back();
  const int side = current.side_of(self);
  const PlayerId opponent = current.opponent_of(self);

  if (rng() % 3) s.plan = Plan(random_plan_text(rng), 1 + played);
  if (rng() % 2) s.critique = Critique(random_plan_text(rng));

  auto& v = s.view;
  v.self = self;
  v.condition = c;
  if (c != Condition::RI) v.self_group = s.config.group_of(self);
  v.match_id = current.match_id;
  v.masked = current.rounds.empty() && rng() % 4 != 0;
  if (!v.masked) {
    v.opponent = opponent;
    if (c != Condition::RI) v.opponent_group = s.config.group_of(opponent);
    v.match_players = current.players;
  }
  for (const auto& r : current.rounds) {
    v.current_match_rounds.push_back({r.actions[static_cast<std::size_t>(side)],
                                      r.actions[static_cast<std::size_t>(1 - side)],
                                      r.payoffs[static_cast<std::size_t>(side)],
                                      r.payoffs[static_cast<std::size_t>(1 - side)]});
  }
  if (budget) v.remaining_budget = std::max(0, *budget - played);
  v.total_score = score;
  v.global_round = played + 1;
  v.current_plan = s.plan;

  auto& ctx = s.context;
  ctx.self = self;
  ctx.self_group = v.self_group;
  ctx.condition = c;
  ctx.remaining_budget = v.remaining_budget;
  ctx.total_score = score;
  ctx.global_round = played + 1;
  return s;
}

/// Case-insensitive search for the words the prompts must never contain.
inline bool mentions_forbidden_words(const std::string& text) {
  std::string lower(text.size(), ' ');
  std::transform(text.begin(), text.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return lower.find("cooperat") != std::string::npos || lower.find("defect") != std::string::npos;
}

}  // namespace ipd::testing
