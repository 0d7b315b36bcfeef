// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "ipd/analysis.hpp"
#include "ipd/errors.hpp"
#include "ipd/export.hpp"
#include "ipd/metrics.hpp"
#include "ipd/mock_backend.hpp"
#include "ipd/prompting.hpp"
#include "ipd/scheduler.hpp"
#include "ipd/tournament.hpp"
#include "support.hpp"

namespace {

using namespace ipd;
using nlohmann::json;
namespace fs = std::filesystem;
using testing::config_path;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects the first few failure messages of a check.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, messages_ + (failures_ > 3 ? " (+" + std::to_string(failures_ - 3) + " more)" : "")};
  }

 private:
  int failures_ = 0;
  std::string messages_;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

double parse_double(const std::string& s) {
  double v = std::nan("");
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

TournamentConfig experiment(Condition c) {
  ConfigOverrides o;
  o.condition = c;
  return load_config(config_path("experiment.yaml"), o);
}

ModelResources mock_resources(const TournamentConfig& cfg, std::shared_ptr<Transport> transport) {
  return {std::make_shared<const PromptEngine>(PromptEngine::load(cfg.templates_dir)),
          std::make_shared<const ModelClient>(cfg.model, std::move(transport))};
}

std::string serialize(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) out += to_json(e).dump() + "\n";
  return out;
}

/// Payoffs recomputed from the matrix echoed into trial_start, without the game engine.
struct PayoffTally {
  long rounds = 0;
  long mismatches = 0;
};

void tally_payoffs(const std::string& jsonl, PayoffTally& tally) {
  std::istringstream in(jsonl);
  json matrix;
  std::array<std::string, 2> actions;
  for (std::string line; std::getline(in, line);) {
    const auto e = json::parse(line);
    const auto& d = e["data"];
    if (e["kind"] == "trial_start") matrix = d["config"]["matrix"];
    if (e["kind"] == "move_pair") actions = {d["actions"][0], d["actions"][1]};
    if (e["kind"] != "payoff") continue;
    const auto points = [&](const std::string& own, const std::string& other) {
      if (own == "A") return matrix[other == "A" ? "mutual_a" : "lone_a"].get<int>();
      return matrix[other == "A" ? "lone_b" : "mutual_b"].get<int>();
    };
    ++tally.rounds;
    if (d["payoffs"][0] != points(actions[0], actions[1]) || d["payoffs"][1] != points(actions[1], actions[0]))
      ++tally.mismatches;
  }
}

// 1
Outcome schedule_counts() {
  Check c;
  double slowest = 0;
  for (const auto& [cond, want] : std::vector<std::pair<std::string, int>>{{"ri", 15}, {"sa", 15}, {"gc", 9}}) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = testing::run_cli("schedule --config " + q(config_path("experiment.yaml")) + " --condition " + cond);
    slowest = std::max(slowest, seconds_since(start));
    c.expect(r.code == 0, cond + ": exit " + std::to_string(r.code));
    int lines = 0;
    int intra = 0;
    std::istringstream in(r.out);
    for (std::string line; std::getline(in, line);) {
      if (line.rfind("match ", 0) != 0) continue;
      ++lines;
      if (line.find("(intra-group)") != std::string::npos) ++intra;
    }
    c.expect(lines == want, cond + ": " + std::to_string(lines) + " pairings, want " + std::to_string(want));
    if (cond == "gc") c.expect(intra == 0, "gc: " + std::to_string(intra) + " intra-group pairings");
  }
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (const auto& p : build_schedule(experiment(Condition::GC), seed))
      c.expect(!p.intra_group, "gc schedule with intra-group pairing, seed " + std::to_string(seed));
  }
  c.expect(slowest < 1.0, "schedule took " + fixed(slowest, 3) + "s");
  return c.done("RI 15, SA 15, GC 9 pairings, 0 intra-group under GC over 200 seeds, slowest " + fixed(slowest, 3) +
                "s");
}

// 2
Outcome payoff_conformance() {
  Check c;
  for (const auto& m : {PayoffMatrix::prompt_default(), PayoffMatrix::table_preset()}) {
    const bool ordered = m.lone_b > m.mutual_a && m.mutual_a > m.mutual_b && m.mutual_b > m.lone_a;
    c.expect(ordered && m.is_prisoners_dilemma(), "matrix fails the ordering invariant");
  }
  PayoffTally tally;
  const Condition conds[] = {Condition::RI, Condition::GC, Condition::SA};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto cfg = testing::random_scripted_config(seed, conds[seed % 3]);
    cfg.matrix = seed % 2 ? PayoffMatrix::table_preset() : PayoffMatrix::prompt_default();
    cfg.matrix_name = seed % 2 ? "table_preset" : "prompt_default";
    MemoryRecorder rec;
    run_trial(cfg, 0, seed, rec, {});
    tally_payoffs(serialize(rec.events()), tally);
    try {
      replay_trial(cfg, rec.events());
    } catch (const std::exception& e) {
      c.expect(false, std::string("replay: ") + e.what());
    }
  }
  for (const auto& m : {PayoffMatrix::prompt_default(), PayoffMatrix::table_preset()}) {
    auto cfg = experiment(Condition::SA);
    cfg.matrix = m;
    MemoryRecorder rec;
    run_trial(cfg, 0, cfg.seed, rec, mock_resources(cfg, make_mock_transport()));
    tally_payoffs(serialize(rec.events()), tally);
  }
  c.expect(tally.rounds > 0 && tally.mismatches == 0,
           std::to_string(tally.mismatches) + " of " + std::to_string(tally.rounds) + " rounds disagree");
  return c.done(std::to_string(tally.rounds) + "/" + std::to_string(tally.rounds) +
                " rounds replay under both matrices; both matrices satisfy T > R > P > S");
}

// 3
Outcome oracle_tournament() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load_config(config_path("oracle_tft_vs_ad.yaml"));
  MemoryRecorder rec;
  const auto r = run_trial(cfg, 0, cfg.seed, rec, {});
  const std::vector<TrialData> trials{load_trial(rec.events())};
  const auto series = player_series(trials);
  const double elapsed = seconds_since(start);
  c.expect(series.size() == 2, "expected two players");
  if (series.size() != 2) return c.done("");
  const double tft_pc = series[0].p_c.back();
  const double tft_osc = series[0].p_osc.back();
  const double ad_osc = series[1].p_osc.back();
  const int tft_score = r.state.player(PlayerId{0}).score;
  const int ad_score = r.state.player(PlayerId{1}).score;
  c.expect(tft_pc == 0.1, "TFT p_c " + fixed(tft_pc, 17));
  c.expect(tft_osc == 1.0, "TFT p_osc " + fixed(tft_osc));
  c.expect(ad_osc == 0.0, "AD p_osc " + fixed(ad_osc));
  c.expect(tft_score == 9 && ad_score == 14,
           "scores " + std::to_string(tft_score) + "/" + std::to_string(ad_score) + ", want 9/14");
  c.expect(elapsed < 1.0, "took " + fixed(elapsed, 3) + "s");
  return c.done("TFT p_c=0.1, p_osc=1.0; AD p_osc=0.0; scores TFT 9, AD 14; " + fixed(elapsed, 3) + "s");
}

// 4
Outcome budget_enforcement() {
  Check c;
  const Condition conds[] = {Condition::RI, Condition::GC, Condition::SA};
  int max_seen = 0;
  int at_cap = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto cfg = testing::random_scripted_config(1000 + seed, conds[seed % 3]);
    MemoryRecorder rec;
    run_trial(cfg, 0, seed, rec, {});
    testing::Recount rc;
    testing::recount_log(serialize(rec.events()), rc);
    for (const auto& [key, counts] : rc.rounds) {
      c.expect(counts.total <= *cfg.round_budget, "seed " + std::to_string(seed) + ": player " +
                                                      std::to_string(key.second) + " played " +
                                                      std::to_string(counts.total) + " > N");
      max_seen = std::max(max_seen, counts.total - *cfg.round_budget);
      at_cap += counts.total == *cfg.round_budget ? 1 : 0;
    }
  }
  std::string message;
  try {
    validate_budget(load_config(config_path("bad_budget.yaml")));
    c.expect(false, "N >= n*m accepted");
  } catch (const BudgetConstraintError& e) {
    message = e.what();
    c.expect(message.find("N < n*m") != std::string::npos, "error does not name the inequality: " + message);
  }
  const auto cli = testing::run_cli("schedule --config " + q(config_path("bad_budget.yaml")));
  c.expect(cli.code == 2, "CLI exit " + std::to_string(cli.code) + ", want 2");
  c.expect(cli.out.find("N < n*m") != std::string::npos, "CLI message lacks the inequality");
  return c.done("100 seeds, no player above N (" + std::to_string(at_cap) +
                " player-trials reached N exactly); N=50, n=10, m=5 rejected: \"" + message + "\"");
}

// 5
Outcome prompt_hygiene() {
  Check c;
  const auto engine = PromptEngine::embedded();
  std::mt19937_64 rng(20240601);
  int rendered = 0;
  int masked = 0;
  for (int i = 0; i < 1000; ++i) {
    auto s = testing::random_state(rng);
    const auto move = engine.render_move(s.view, s.config).text;
    const auto plan = engine.render_plan(s.context, s.plan, s.critique, s.config).text;
    const auto critique =
        engine.render_critique(s.context, s.plan.value_or(Plan(testing::random_plan_text(rng), 1)), s.config).text;
    rendered += 3;
    for (const auto* text : {&move, &plan, &critique})
      c.expect(!testing::mentions_forbidden_words(*text), "state " + std::to_string(i) + " leaks a forbidden word");
    if (s.view.masked) {
      ++masked;
      c.expect(move.find("Player unknown from Group unknown") != std::string::npos,
               "state " + std::to_string(i) + ": masked prompt lacks the unknown-opponent line");
    }
  }

  // Round-1 prompts in real tournaments, every condition.
  int round_one = 0;
  int scanned = 0;
  for (auto cond : {Condition::RI, Condition::GC, Condition::SA}) {
    auto cfg = experiment(cond);
    auto transport = std::make_shared<testing::CapturingTransport>();
    MemoryRecorder rec;
    const auto r = run_trial(cfg, 0, cfg.seed, rec, mock_resources(cfg, transport));
    int played = 0;
    for (const auto& m : r.state.completed_matches) played += m.rounds.empty() ? 0 : 1;
    int first = 0;
    for (const auto& p : transport->prompts()) {
      const bool is_move = p.find("Choose your action for this round") != std::string::npos;
      const bool is_meta = p.find("{\"answers\":") != std::string::npos;
      if (!is_meta) {
        ++scanned;
        c.expect(!testing::mentions_forbidden_words(p), "tournament prompt leaks a forbidden word");
      }
      if (is_move && p.find("No rounds have been played in this match yet.") != std::string::npos) {
        ++first;
        c.expect(p.find("Player unknown from Group unknown") != std::string::npos,
                 "round-1 prompt without the masked line");
      }
    }
    c.expect(first == 2 * played, std::string(to_string(cond)) + ": " + std::to_string(first) +
                                      " round-1 prompts for " + std::to_string(played) + " matches");
    round_one += first;
  }
  return c.done(std::to_string(rendered) + " randomized prompts and " + std::to_string(scanned) +
                " tournament prompts free of the words; " + std::to_string(masked + round_one) +
                " round-1 prompts carry the masked line");
}

struct Block {
  int a = 0;
  int b = 0;
  std::vector<std::pair<std::string, std::string>> rounds;  // own, opponent
};

// 6
Outcome history_scoping() {
  Check c;
  static const std::regex self_re(R"(You are Player (\d+))");
  static const std::regex header_re(R"(^Results of match between player (\d+) and player (\d+):$)");
  static const std::regex round_re(R"(^Round (\d+): You chose (action_[ab]), opponent chose (action_[ab])\. .*$)");
  long prompts = 0;
  long blocks = 0;
  for (auto cond : {Condition::RI, Condition::GC, Condition::SA}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto cfg = experiment(cond);
      cfg.seed = seed;
      auto transport = std::make_shared<testing::CapturingTransport>();
      MemoryRecorder rec;
      const auto r = run_trial(cfg, 0, seed, rec, mock_resources(cfg, transport));
      std::map<std::pair<int, int>, const MatchRecord*> by_pair;
      for (const auto& m : r.state.completed_matches) by_pair[{m.players[0].value, m.players[1].value}] = &m;

      for (const auto& p : transport->prompts()) {
        ++prompts;
        std::smatch sm;
        if (!std::regex_search(p, sm, self_re)) {
          c.expect(false, "prompt without a player identity");
          continue;
        }
        const int self = std::stoi(sm[1]);
        std::vector<Block> found;
        std::istringstream in(p);
        for (std::string line; std::getline(in, line);) {
          if (std::regex_match(line, sm, header_re)) {
            found.push_back({std::stoi(sm[1]), std::stoi(sm[2]), {}});
          } else if (std::regex_match(line, sm, round_re)) {
            if (found.empty()) {
              c.expect(false, "round line outside a match block");
              continue;
            }
            c.expect(std::stoi(sm[1]) == static_cast<int>(found.back().rounds.size()) + 1, "round numbering");
            found.back().rounds.emplace_back(sm[2], sm[3]);
          }
        }
        const bool is_move = p.find("Choose your action for this round") != std::string::npos;
        c.expect(!is_move || found.size() <= 1, "move prompt shows more than the current match");
        for (const auto& b : found) {
          ++blocks;
          c.expect(b.a == self || b.b == self, "player " + std::to_string(self) + " shown match " +
                                                   std::to_string(b.a) + "-" + std::to_string(b.b));
          const auto it = by_pair.find({b.a, b.b});
          if (it == by_pair.end()) {
            c.expect(false, "history names a match that was never played");
            continue;
          }
          const MatchRecord& m = *it->second;
          if (!m.involves(PlayerId{self})) continue;
          const int side = m.side_of(PlayerId{self});
          c.expect(b.rounds.size() <= m.rounds.size(), "history longer than the match");
          for (std::size_t i = 0; i < b.rounds.size() && i < m.rounds.size(); ++i) {
            const auto& rr = m.rounds[i];
            c.expect(b.rounds[i].first == to_token(rr.actions[static_cast<std::size_t>(side)]) &&
                         b.rounds[i].second == to_token(rr.actions[static_cast<std::size_t>(1 - side)]),
                     "history round differs from the log");
          }
        }
      }
    }
  }
  return c.done(std::to_string(prompts) + " prompts over 9 tournaments; all " + std::to_string(blocks) +
                " history blocks belong to matches the prompted player played and match the log");
}

// 7
Outcome ci_computation() {
  Check c;
  const std::vector<double> xs{0.2, 0.25, 0.3};
  const auto r = mean_with_ci(xs);
  // t-table: t_{0.975, 2} = 4.303; s = 0.05
  const double oracle = 4.303 * 0.05 / std::sqrt(3.0);
  c.expect(std::abs(r.half_width - oracle) <= 1e-3, "half-width " + fixed(r.half_width) + " vs " + fixed(oracle));
  c.expect(std::abs(r.half_width - 0.1242) <= 1e-3, "half-width " + fixed(r.half_width) + " vs 0.1242");
  for (double v : {0.0, 0.4, 1.0}) {
    const std::vector<double> same(5, v);
    const auto k = mean_with_ci(same);
    c.expect(k.half_width == 0.0 && k.ci_low == v && k.ci_high == v, "constant samples give a nonzero width");
  }
  return c.done("half-width " + fixed(r.half_width) + " (oracle " + fixed(oracle) +
                "); constant samples give zero width");
}

// 8
Outcome planning_cadence() {
  Check c;
  int points = 0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    auto cfg = experiment(Condition::SA);
    c.expect(cfg.planning_interval == 5, "K is not 5");
    MemoryRecorder rec;
    run_trial(cfg, static_cast<int>(trial), cfg.seed + trial, rec, mock_resources(cfg, make_mock_transport()));
    std::map<int, int> played;
    std::map<int, std::map<int, std::pair<int, int>>> calls;  // player -> global round -> (plan, critique)
    std::array<int, 2> players{};
    for (const auto& e : rec.events()) {
      if (e.kind == EventKind::match_start) players = {e.data["players"][0], e.data["players"][1]};
      if (e.kind == EventKind::move_pair) {
        ++played[players[0]];
        ++played[players[1]];
      }
      if (e.kind == EventKind::model_exchange_ref) {
        const int p = e.data["player"];
        const std::string kind = e.data["kind"];
        if (kind == "plan") ++calls[p][played[p] + 1].first;
        if (kind == "critique") ++calls[p][played[p] + 1].second;
      }
    }
    for (const auto& [p, total] : played) {
      std::set<int> expected;
      for (int g = 1; g <= total; g += 5) expected.insert(g);
      std::set<int> got;
      for (const auto& [g, pc] : calls[p]) {
        got.insert(g);
        c.expect(pc == std::make_pair(2, 1), "player " + std::to_string(p) + " round " + std::to_string(g) +
                                                 ": not one draft, one critique, one final");
      }
      c.expect(got == expected, "trial " + std::to_string(trial) + " player " + std::to_string(p) +
                                    ": planning rounds differ from 1, 6, 11, ...");
      points += static_cast<int>(got.size());
    }
  }
  return c.done(std::to_string(points) +
                " planning points over 5 mock SA trials, all at global rounds 1, 6, 11, ... of each player");
}

// 9
Outcome end_to_end() {
  Check c;
  MockServer server;
  server.start();
  const auto dir = testing::scratch_dir("acceptance-e2e");
  const std::string base = "run --config " + q(config_path("experiment.yaml")) + " --condition sa --endpoint " +
                           server.endpoint() + " --out ";
  const auto start = std::chrono::steady_clock::now();
  const auto first = testing::run_cli(base + q(dir / "a"));
  const double elapsed = seconds_since(start);
  const auto second = testing::run_cli(base + q(dir / "b"));
  c.expect(first.code == 0 && second.code == 0,
           "exit " + std::to_string(first.code) + "/" + std::to_string(second.code) + ": " + first.out);
  c.expect(elapsed < 60.0, "took " + fixed(elapsed, 2) + "s");

  int trials = 0;
  for (int t = 0; t < 5; ++t) {
    const auto name = "events_trial" + std::to_string(t) + ".jsonl";
    const auto a = testing::read_file(dir / "a" / name);
    c.expect(!a.empty() && a == testing::read_file(dir / "b" / name), name + " differs between runs");
    try {
      const auto data = load_trial_file(dir / "a" / name);
      c.expect(data.complete, name + " incomplete");
      c.expect(data.config.player_count() == 6, name + ": not 6 players");
      ++trials;
    } catch (const std::exception& e) {
      c.expect(false, name + ": " + e.what());
    }
  }
  const auto schema = csv_schema();
  int csvs = 0;
  for (const auto& [name, cols] : schema["files"].items()) {
    const auto rows = testing::parse_csv(testing::read_file(dir / "a" / "csv" / name));
    const bool header = !rows.empty() && rows[0] == cols.get<std::vector<std::string>>();
    bool widths = true;
    for (const auto& r : rows) widths &= r.size() == cols.size();
    c.expect(header && widths && rows.size() > 1, name + " is not a well-formed CSV");
    ++csvs;
  }
  try {
    check_csv_schema(dir / "a" / "csv");
  } catch (const std::exception& e) {
    c.expect(false, e.what());
  }
  const auto manifest = read_manifest(dir / "a" / "manifest.json");
  c.expect(manifest.status == "complete", "manifest status " + manifest.status);
  server.stop();
  fs::remove_all(dir);
  return c.done("exit 0, " + std::to_string(trials) + " complete trials, " + std::to_string(csvs) +
                " CSVs parse, rerun byte-identical, " + fixed(elapsed, 2) + "s");
}

// 10
Outcome metrics_equivalence() {
  Check c;
  const auto dir = testing::scratch_dir("acceptance-metrics");
  const Condition conds[] = {Condition::RI, Condition::GC, Condition::SA};
  long compared = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cfg = testing::random_scripted_config(500 + seed, conds[seed % 3]);
    std::vector<TrialData> trials;
    std::string raw;
    for (int t = 0; t < 2; ++t) {
      const auto events = dir / ("events_" + std::to_string(seed) + "_" + std::to_string(t) + ".jsonl");
      {
        EventLog log(events, dir / "exchanges.jsonl");
        run_trial(cfg, t, cfg.seed + static_cast<std::uint64_t>(t), log, {});
      }
      trials.push_back(load_trial_file(events));
      raw += testing::read_file(events);
    }
    testing::Recount rc;
    testing::recount_log(raw, rc);

    std::map<std::string, std::vector<std::vector<std::string>>> csv;
    for (const auto& [name, text] : render_csv(trials)) csv[name] = testing::parse_csv(text);

    // Last running value per (trial, player) is the overall rate.
    std::map<std::pair<int, int>, double> p_c;
    std::map<std::pair<int, int>, double> p_osc;
    for (std::size_t i = 1; i < csv["coop_by_round.csv"].size(); ++i) {
      const auto& r = csv["coop_by_round.csv"][i];
      p_c[{std::stoi(r[0]), std::stoi(r[1])}] = parse_double(r[4]);
    }
    for (std::size_t i = 1; i < csv["osc_by_match.csv"].size(); ++i) {
      const auto& r = csv["osc_by_match.csv"][i];
      p_osc[{std::stoi(r[0]), std::stoi(r[1])}] = parse_double(r[4]);
    }
    c.expect(p_c.size() == rc.rounds.size(), "player-trial count differs");
    for (const auto& [key, counts] : rc.rounds) {
      c.expect(p_c[key] == counts.rate(), "p_c differs for seed " + std::to_string(seed));
      ++compared;
    }
    for (const auto& [key, counts] : rc.first_moves) {
      c.expect(p_osc[key] == counts.rate(), "p_osc differs for seed " + std::to_string(seed));
      ++compared;
    }
    std::map<std::string, std::vector<double>> split_values;
    for (std::size_t i = 1; i < csv["group_split_samples.csv"].size(); ++i) {
      const auto& r = csv["group_split_samples.csv"][i];
      const std::pair key{std::stoi(r[0]), std::stoi(r[1])};
      const auto& counts = r[2] == "intra" ? rc.intra : rc.inter;
      c.expect(counts.contains(key) && parse_double(r[4]) == counts.at(key).rate() &&
                   std::stoi(r[3]) == counts.at(key).total,
               "group split sample differs for seed " + std::to_string(seed));
      split_values[r[2]].push_back(parse_double(r[4]));
      ++compared;
    }
    std::size_t split_samples = 0;
    for (const auto& [key, counts] : rc.intra) split_samples += counts.total > 0 ? 1 : 0;
    for (const auto& [key, counts] : rc.inter) split_samples += counts.total > 0 ? 1 : 0;
    c.expect(split_samples + 1 == csv["group_split_samples.csv"].size(), "group split sample count differs");
    for (std::size_t i = 1; i < csv["group_split.csv"].size(); ++i) {
      const auto& r = csv["group_split.csv"][i];
      const auto& v = split_values[r[0]];
      double sum = 0;
      for (double x : v) sum += x;
      const double mean = sum / static_cast<double>(v.size());
      c.expect(std::abs(parse_double(r[2]) - mean) <= 4 * std::numeric_limits<double>::epsilon(),
               "group split mean differs for seed " + std::to_string(seed));
      ++compared;
    }
  }
  fs::remove_all(dir);
  return c.done(std::to_string(compared) +
                " values over 20 tournaments (p_c, p_osc, group-split) equal the raw-log recount");
}

// 11
Outcome meta_scoring() {
  Check c;
  auto cfg = load_config(config_path("scripted_mix.yaml"));
  cfg.trials = 3;
  const auto run_all = [&](MetaAnswerMode mode) {
    for (auto& [p, b] : cfg.agents) b.meta_mode = mode;
    std::vector<TrialData> trials;
    for (int t = 0; t < cfg.trials; ++t) {
      MemoryRecorder rec;
      run_trial(cfg, t, cfg.seed + static_cast<std::uint64_t>(t), rec, {});
      trials.push_back(load_trial(rec.events()));
    }
    return trials;
  };
  const auto truthful = run_all(MetaAnswerMode::truth);
  const auto inverted = run_all(MetaAnswerMode::inverted);
  std::string summary;
  for (const auto& s : meta_accuracy(scored_meta_answers(truthful))) {
    c.expect(s.accuracy == 1.0, "truthful " + s.question_id + " accuracy " + fixed(s.accuracy.value_or(-1)));
    summary += s.question_id + " " + std::to_string(s.correct) + "/" + std::to_string(s.total) + " ";
  }
  for (const auto& s : meta_accuracy(scored_meta_answers(inverted)))
    c.expect(s.accuracy == 0.0, "inverted " + s.question_id + " accuracy " + fixed(s.accuracy.value_or(-1)));

  // Independent count of forgiving opportunities: our B before the opponent's next move.
  int asked = 0;
  int scoreable = 0;
  for (const auto& t : truthful) {
    std::map<int, const MatchRecord*> matches;
    for (const auto& m : t.matches) matches[m.match_id] = &m;
    for (const auto& rec : t.meta) {
      const MatchRecord& m = *matches.at(rec.match_id);
      const int me = m.side_of(rec.player);
      bool chance = false;
      for (std::size_t i = 0; i + 1 < m.rounds.size(); ++i) chance |= m.rounds[i].actions[me] == Action::B;
      ++asked;
      scoreable += chance ? 1 : 0;
    }
  }
  int behavior_total = -1;
  for (const auto& s : meta_accuracy(scored_meta_answers(truthful)))
    if (s.question_id == "behavior") behavior_total = s.total;
  c.expect(asked > scoreable, "fixture has no zero-opportunity cases");
  c.expect(behavior_total == scoreable, "behavior total " + std::to_string(behavior_total) + ", want " +
                                            std::to_string(scoreable));
  return c.done("truthful 1.0 (" + summary + "), inverted 0.0; " + std::to_string(asked - scoreable) + " of " +
                std::to_string(asked) + " forgiving questions had no opportunity and were excluded");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"schedule-counts", schedule_counts},
      {"payoff-conformance", payoff_conformance},
      {"oracle-tournament", oracle_tournament},
      {"budget-enforcement", budget_enforcement},
      {"prompt-hygiene", prompt_hygiene},
      {"history-scoping", history_scoping},
      {"ci-computation", ci_computation},
      {"planning-cadence", planning_cadence},
      {"end-to-end-mock-run", end_to_end},
      {"metrics-oracle-equivalence", metrics_equivalence},
      {"meta-scoring", meta_scoring},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
