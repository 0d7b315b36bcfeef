#include "ipd/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ipd/errors.hpp"

namespace ipd {

namespace {

using nlohmann::json;

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for '" + what + "'");
  }
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar: {
      const auto& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      if (s == "true" || s == "false") return s == "true";
      try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
      } catch (...) {
      }
      try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size()) return v;
      } catch (...) {
      }
      return s;
    }
  }
  return nullptr;
}

AgentBinding parse_binding(const YAML::Node& node, const std::string& where) {
  AgentBinding b;
  if (node.IsScalar()) {
    auto kind = agent_kind_from_string(node.as<std::string>());
    if (!kind) throw ConfigError(where + ": unknown agent kind '" + node.as<std::string>() + "'");
    b.kind = *kind;
    return b;
  }
  check_keys(node, {"kind", "p", "exit_round", "exit_action", "meta_answers"}, where);
  if (!node["kind"]) throw ConfigError(where + ": missing 'kind'");
  auto kind = agent_kind_from_string(node["kind"].as<std::string>());
  if (!kind) throw ConfigError(where + ": unknown agent kind '" + node["kind"].as<std::string>() + "'");
  b.kind = *kind;
  if (node["p"]) b.a_probability = scalar<double>(node["p"], where + ".p");
  if (node["exit_round"]) b.exit_round = scalar<int>(node["exit_round"], where + ".exit_round");
  if (node["exit_action"]) {
    auto a = action_from_token(node["exit_action"].as<std::string>());
    if (!a) throw ConfigError(where + ".exit_action must be action_a or action_b");
    b.exit_action = *a;
  }
  if (node["meta_answers"]) {
    const auto mode = node["meta_answers"].as<std::string>();
    if (mode == "truth") {
      b.meta_mode = MetaAnswerMode::truth;
    } else if (mode == "inverted") {
      b.meta_mode = MetaAnswerMode::inverted;
    } else {
      throw ConfigError(where + ".meta_answers must be truth or inverted");
    }
  }
  return b;
}

PayoffMatrix parse_matrix(const YAML::Node& node, std::string& name) {
  if (node.IsScalar()) {
    name = node.as<std::string>();
    if (name == "prompt_default") return PayoffMatrix::prompt_default();
    if (name == "table_preset") return PayoffMatrix::table_preset();
    throw ConfigError("matrix: unknown preset '" + name + "'");
  }
  check_keys(node, {"mutual_a", "lone_a", "lone_b", "mutual_b"}, "matrix");
  for (auto key : {"mutual_a", "lone_a", "lone_b", "mutual_b"}) {
    if (!node[key]) throw ConfigError(std::string("matrix: missing '") + key + "'");
  }
  name = "custom";
  return {scalar<int>(node["mutual_a"], "matrix.mutual_a"), scalar<int>(node["lone_a"], "matrix.lone_a"),
          scalar<int>(node["lone_b"], "matrix.lone_b"), scalar<int>(node["mutual_b"], "matrix.mutual_b")};
}

MetaQuestion named_question(const std::string& id) {
  if (id == "strategy") return MetaConfig::strategy_question();
  if (id == "behavior") return MetaConfig::behavior_question();
  if (id == "total_score") return MetaConfig::total_score_question();
  throw ConfigError("meta.questions: unknown question '" + id + "'");
}

void apply_condition_block(TournamentConfig& cfg, const YAML::Node& node, const std::string& where) {
  check_keys(node, {"max_rounds", "round_budget", "planning_interval", "trials"}, where);
  if (node["max_rounds"]) cfg.max_rounds = scalar<int>(node["max_rounds"], where + ".max_rounds");
  if (node["round_budget"]) {
    if (node["round_budget"].IsNull()) {
      cfg.round_budget.reset();
    } else {
      cfg.round_budget = scalar<int>(node["round_budget"], where + ".round_budget");
    }
  }
  if (node["planning_interval"])
    cfg.planning_interval = scalar<int>(node["planning_interval"], where + ".planning_interval");
  if (node["trials"]) cfg.trials = scalar<int>(node["trials"], where + ".trials");
}

TournamentConfig parse_yaml(const YAML::Node& root, const ConfigOverrides& overrides,
                            const std::filesystem::path& base_dir) {
  check_keys(root,
             {"condition", "players", "groups", "max_rounds", "round_budget", "planning_interval", "trials",
              "seed", "matrix", "mask_first_round", "show_remaining_budget", "templates_dir", "agents",
              "model", "meta", "conditions"},
             "config");
  TournamentConfig cfg;

  if (root["condition"]) {
    auto c = condition_from_string(root["condition"].as<std::string>());
    if (!c) throw ConfigError("condition must be one of ri, gc, sa");
    cfg.condition = *c;
  }
  if (overrides.condition) cfg.condition = *overrides.condition;

  if (!root["players"]) throw ConfigError("config: missing 'players'");
  const auto& players = root["players"];
  if (players.IsScalar()) {
    const int h = scalar<int>(players, "players");
    for (int i = 0; i < h; ++i) cfg.players.push_back(PlayerId{i});
  } else {
    for (const auto& p : players) cfg.players.push_back(PlayerId{scalar<int>(p, "players[]")});
  }

  if (root["groups"]) {
    int g = 0;
    for (const auto& group : root["groups"]) {
      for (const auto& p : group) {
        PlayerId id{scalar<int>(p, "groups[][]")};
        if (!cfg.groups.emplace(id, GroupId{g}).second) {
          throw ConfigError("groups: player " + std::to_string(id.value) + " listed twice");
        }
      }
      ++g;
    }
  }

  if (root["max_rounds"]) cfg.max_rounds = scalar<int>(root["max_rounds"], "max_rounds");
  if (root["round_budget"] && !root["round_budget"].IsNull())
    cfg.round_budget = scalar<int>(root["round_budget"], "round_budget");
  if (root["planning_interval"]) cfg.planning_interval = scalar<int>(root["planning_interval"], "planning_interval");
  if (root["trials"]) cfg.trials = scalar<int>(root["trials"], "trials");
  if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["matrix"]) cfg.matrix = parse_matrix(root["matrix"], cfg.matrix_name);
  if (root["mask_first_round"]) cfg.mask_first_round = scalar<bool>(root["mask_first_round"], "mask_first_round");
  if (root["show_remaining_budget"])
    cfg.show_remaining_budget = scalar<bool>(root["show_remaining_budget"], "show_remaining_budget");
  if (root["templates_dir"]) {
    std::filesystem::path dir = root["templates_dir"].as<std::string>();
    cfg.templates_dir = (dir.is_relative() ? base_dir / dir : dir).lexically_normal().string();
  }

  if (root["conditions"]) {
    const auto& block = root["conditions"];
    check_keys(block, {"ri", "gc", "sa"}, "conditions");
    const std::string key{to_string(cfg.condition)};
    if (block[key]) apply_condition_block(cfg, block[key], "conditions." + key);
  }

  AgentBinding fallback;
  std::map<PlayerId, AgentBinding> explicit_bindings;
  if (root["agents"]) {
    const auto& agents = root["agents"];
    check_keys(agents, {"default", "players"}, "agents");
    if (agents["default"]) fallback = parse_binding(agents["default"], "agents.default");
    if (agents["players"]) {
      for (const auto& kv : agents["players"]) {
        PlayerId id{scalar<int>(kv.first, "agents.players key")};
        explicit_bindings[id] = parse_binding(kv.second, "agents.players." + std::to_string(id.value));
      }
    }
  }
  for (const auto& p : cfg.players) {
    auto it = explicit_bindings.find(p);
    cfg.agents[p] = it != explicit_bindings.end() ? it->second : fallback;
  }
  for (const auto& [id, _] : explicit_bindings) {
    if (!cfg.agents.contains(id) || std::find(cfg.players.begin(), cfg.players.end(), id) == cfg.players.end())
      throw ConfigError("agents.players: unknown player " + std::to_string(id.value));
  }

  if (root["model"]) {
    const auto& m = root["model"];
    check_keys(m, {"endpoint", "model", "api_path", "health_path", "timeout_s", "max_retries", "retry_backoff_ms",
                   "sampling"},
               "model");
    if (m["endpoint"]) cfg.model.endpoint = m["endpoint"].as<std::string>();
    if (m["model"]) cfg.model.model = m["model"].as<std::string>();
    if (m["api_path"]) cfg.model.api_path = m["api_path"].as<std::string>();
    if (m["health_path"]) cfg.model.health_path = m["health_path"].as<std::string>();
    if (m["timeout_s"]) cfg.model.request_timeout_s = scalar<double>(m["timeout_s"], "model.timeout_s");
    if (m["max_retries"]) cfg.model.max_retries = scalar<int>(m["max_retries"], "model.max_retries");
    if (m["retry_backoff_ms"]) cfg.model.retry_backoff_ms = scalar<int>(m["retry_backoff_ms"], "model.retry_backoff_ms");
    if (m["sampling"]) cfg.model.sampling = yaml_to_json(m["sampling"]);
  }
  if (const char* env = std::getenv("IPD_ENDPOINT"); env && *env) cfg.model.endpoint = env;
  if (const char* env = std::getenv("IPD_MODEL"); env && *env) cfg.model.model = env;

  if (root["meta"]) {
    const auto& m = root["meta"];
    check_keys(m, {"questions", "tft_threshold", "forgiving_threshold"}, "meta");
    if (m["questions"]) {
      cfg.meta.questions.clear();
      for (const auto& q : m["questions"]) {
        if (q.IsScalar()) {
          cfg.meta.questions.push_back(named_question(q.as<std::string>()));
          continue;
        }
        check_keys(q, {"id", "text", "answer"}, "meta.questions[]");
        MetaQuestion custom{q["id"].as<std::string>(), q["text"].as<std::string>(), MetaQuestion::Answer::yes_no};
        if (q["answer"] && q["answer"].as<std::string>() == "integer") custom.answer = MetaQuestion::Answer::integer;
        cfg.meta.questions.push_back(custom);
      }
    }
    if (m["tft_threshold"]) cfg.meta.tft_threshold = scalar<double>(m["tft_threshold"], "meta.tft_threshold");
    if (m["forgiving_threshold"])
      cfg.meta.forgiving_threshold = scalar<double>(m["forgiving_threshold"], "meta.forgiving_threshold");
  }

  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.trials) cfg.trials = *overrides.trials;
  if (overrides.endpoint) cfg.model.endpoint = *overrides.endpoint;
  if (overrides.model) cfg.model.model = *overrides.model;

  cfg.validate();
  return cfg;
}

}  // namespace

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::RI: return "ri";
    case Condition::GC: return "gc";
    case Condition::SA: return "sa";
  }
  return "?";
}

std::optional<Condition> condition_from_string(std::string_view s) {
  if (s == "ri" || s == "RI") return Condition::RI;
  if (s == "gc" || s == "GC") return Condition::GC;
  if (s == "sa" || s == "SA") return Condition::SA;
  return std::nullopt;
}

namespace {
constexpr std::pair<AgentKind, std::string_view> kAgentNames[] = {
    {AgentKind::always_cooperate, "always_cooperate"},
    {AgentKind::always_defect, "always_defect"},
    {AgentKind::tit_for_tat, "tit_for_tat"},
    {AgentKind::grim_trigger, "grim_trigger"},
    {AgentKind::random, "random"},
    {AgentKind::exit_after, "exit_after"},
    {AgentKind::parochial, "parochial"},
    {AgentKind::model, "model"},
};
}  // namespace

std::string_view to_string(AgentKind k) {
  for (const auto& [kind, name] : kAgentNames)
    if (kind == k) return name;
  return "?";
}

std::optional<AgentKind> agent_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kAgentNames)
    if (name == s) return kind;
  return std::nullopt;
}

MetaQuestion MetaConfig::strategy_question() {
  return {"strategy",
          "Does the opponent mostly follow a Tit For Tat strategy? (Will first cooperate, then subsequently "
          "replicate an opponent's previous action)",
          MetaQuestion::Answer::yes_no};
}

MetaQuestion MetaConfig::behavior_question() {
  return {"behavior",
          "Is the opponent forgiving? (Propensity to choose action_a again after an opponent’s action_b)",
          MetaQuestion::Answer::yes_no};
}

MetaQuestion MetaConfig::total_score_question() {
  return {"total_score", "What is your total score in the tournament so far?", MetaQuestion::Answer::integer};
}

MetaConfig MetaConfig::defaults() {
  MetaConfig m;
  m.questions = {strategy_question(), behavior_question()};
  return m;
}

std::optional<GroupId> TournamentConfig::group_of(PlayerId p) const {
  auto it = groups.find(p);
  if (it == groups.end()) return std::nullopt;
  return it->second;
}

const AgentBinding& TournamentConfig::binding(PlayerId p) const {
  auto it = agents.find(p);
  if (it == agents.end()) throw ConfigError("no agent bound to player " + std::to_string(p.value));
  return it->second;
}

bool TournamentConfig::uses_model() const {
  return std::any_of(agents.begin(), agents.end(), [](const auto& kv) { return kv.second.kind == AgentKind::model; });
}

void TournamentConfig::validate() const {
  if (players.size() < 2) throw ConfigError("at least two players are required");
  std::set<PlayerId> unique(players.begin(), players.end());
  if (unique.size() != players.size()) throw ConfigError("player ids must be unique");
  for (const auto& p : players) {
    if (p.value < 0) throw ConfigError("player ids must be non-negative");
  }
  if (max_rounds < 1) throw ConfigError("max_rounds (n) must be >= 1");
  if (planning_interval < 1) throw ConfigError("planning_interval (K) must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (round_budget && *round_budget < 1) throw ConfigError("round_budget (N) must be >= 1");
  if (!matrix.is_prisoners_dilemma())
    throw ConfigError("matrix violates the prisoner's dilemma ordering lone_b > mutual_a > mutual_b > lone_a");
  if (model.max_retries < 0) throw ConfigError("model.max_retries must be >= 0");
  if (model.request_timeout_s <= 0) throw ConfigError("model.timeout_s must be positive");
  for (const auto& [id, _] : groups) {
    if (!unique.contains(id)) throw ConfigError("groups: unknown player " + std::to_string(id.value));
  }
  if (condition != Condition::RI) {
    for (const auto& p : players) {
      if (!groups.contains(p))
        throw ConfigError(std::string(to_string(condition)) + " requires a group for every player; player " +
                          std::to_string(p.value) + " has none");
    }
  }
  for (const auto& p : players) {
    const auto& b = binding(p);
    if (b.kind == AgentKind::random && (b.a_probability < 0.0 || b.a_probability > 1.0))
      throw ConfigError("random agent probability must lie in [0, 1]");
    if (b.kind == AgentKind::exit_after && b.exit_round < 1) throw ConfigError("exit_round must be >= 1");
    if (b.kind == AgentKind::parochial && !groups.contains(p))
      throw ConfigError("parochial agents need a group assignment");
  }
  if (meta.tft_threshold < 0 || meta.tft_threshold > 1 || meta.forgiving_threshold < 0 ||
      meta.forgiving_threshold > 1)
    throw ConfigError("meta thresholds must lie in [0, 1]");
}

TournamentConfig make_two_group_config(Condition c, AgentKind kind, int n, std::optional<int> budget, int trials,
                                       std::uint64_t seed) {
  TournamentConfig cfg;
  cfg.condition = c;
  for (int i = 0; i < 6; ++i) {
    cfg.players.push_back(PlayerId{i});
    cfg.groups[PlayerId{i}] = GroupId{i / 3};
    cfg.agents[PlayerId{i}] = AgentBinding{kind};
  }
  cfg.max_rounds = n;
  cfg.round_budget = budget;
  cfg.trials = trials;
  cfg.seed = seed;
  return cfg;
}

TournamentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_yaml(root, overrides, path.parent_path());
}

TournamentConfig parse_config(const std::string& yaml_text, const ConfigOverrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.what());
  }
  return parse_yaml(root, overrides, std::filesystem::current_path());
}

json to_json(const TournamentConfig& c) {
  json players = json::array();
  for (const auto& p : c.players) {
    json entry = {{"id", p.value}};
    if (auto g = c.group_of(p)) entry["group"] = g->value;
    const auto& b = c.binding(p);
    json agent = {{"kind", to_string(b.kind)}};
    if (b.kind == AgentKind::random) agent["p"] = b.a_probability;
    if (b.kind == AgentKind::exit_after) {
      agent["exit_round"] = b.exit_round;
      agent["exit_action"] = to_token(b.exit_action);
    }
    if (b.kind != AgentKind::model) agent["meta_answers"] = b.meta_mode == MetaAnswerMode::truth ? "truth" : "inverted";
    entry["agent"] = agent;
    players.push_back(entry);
  }
  json questions = json::array();
  for (const auto& q : c.meta.questions) {
    questions.push_back(
        {{"id", q.id}, {"text", q.text}, {"answer", q.answer == MetaQuestion::Answer::integer ? "integer" : "yes_no"}});
  }
  return {
      {"condition", to_string(c.condition)},
      {"players", players},
      {"max_rounds", c.max_rounds},
      {"round_budget", c.round_budget ? json(*c.round_budget) : json(nullptr)},
      {"planning_interval", c.planning_interval},
      {"trials", c.trials},
      {"seed", c.seed},
      {"matrix",
       {{"name", c.matrix_name},
        {"mutual_a", c.matrix.mutual_a},
        {"lone_a", c.matrix.lone_a},
        {"lone_b", c.matrix.lone_b},
        {"mutual_b", c.matrix.mutual_b}}},
      {"mask_first_round", c.mask_first_round},
      {"show_remaining_budget", c.show_remaining_budget},
      {"templates_dir", c.templates_dir},
      {"model",
       {{"endpoint", c.model.endpoint},
        {"model", c.model.model},
        {"api_path", c.model.api_path},
        {"timeout_s", c.model.request_timeout_s},
        {"max_retries", c.model.max_retries},
        {"retry_backoff_ms", c.model.retry_backoff_ms},
        {"sampling", c.model.sampling}}},
      {"meta",
       {{"questions", questions},
        {"tft_threshold", c.meta.tft_threshold},
        {"forgiving_threshold", c.meta.forgiving_threshold}}},
  };
}

json to_json(const ConfigOverrides& o) {
  json j = json::object();
  if (o.seed) j["seed"] = *o.seed;
  if (o.trials) j["trials"] = *o.trials;
  if (o.condition) j["condition"] = to_string(*o.condition);
  if (o.endpoint) j["endpoint"] = *o.endpoint;
  if (o.model) j["model"] = *o.model;
  return j;
}

TournamentConfig config_from_json(const json& j) {
  try {
    TournamentConfig c;
    const auto cond = condition_from_string(j.at("condition").get<std::string>());
    if (!cond) throw ConfigError("config echo: unknown condition");
    c.condition = *cond;
    for (const auto& entry : j.at("players")) {
      const PlayerId p{entry.at("id").get<int>()};
      c.players.push_back(p);
      if (entry.contains("group")) c.groups[p] = GroupId{entry["group"].get<int>()};
      const auto& agent = entry.at("agent");
      AgentBinding b;
      const auto kind = agent_kind_from_string(agent.at("kind").get<std::string>());
      if (!kind) throw ConfigError("config echo: unknown agent kind");
      b.kind = *kind;
      if (agent.contains("p")) b.a_probability = agent["p"].get<double>();
      if (agent.contains("exit_round")) b.exit_round = agent["exit_round"].get<int>();
      if (agent.contains("exit_action")) {
        const auto a = action_from_token(agent["exit_action"].get<std::string>());
        if (!a) throw ConfigError("config echo: bad exit_action");
        b.exit_action = *a;
      }
      if (agent.value("meta_answers", "truth") == "inverted") b.meta_mode = MetaAnswerMode::inverted;
      c.agents[p] = b;
    }
    c.max_rounds = j.at("max_rounds").get<int>();
    if (!j.at("round_budget").is_null()) c.round_budget = j["round_budget"].get<int>();
    c.planning_interval = j.at("planning_interval").get<int>();
    c.trials = j.at("trials").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& m = j.at("matrix");
    c.matrix_name = m.at("name").get<std::string>();
    c.matrix = {m.at("mutual_a").get<int>(), m.at("lone_a").get<int>(), m.at("lone_b").get<int>(),
                m.at("mutual_b").get<int>()};
    c.mask_first_round = j.at("mask_first_round").get<bool>();
    c.show_remaining_budget = j.at("show_remaining_budget").get<bool>();
    c.templates_dir = j.value("templates_dir", "");
    if (j.contains("model")) {
      const auto& mj = j["model"];
      c.model.endpoint = mj.value("endpoint", c.model.endpoint);
      c.model.model = mj.value("model", c.model.model);
      c.model.api_path = mj.value("api_path", c.model.api_path);
      c.model.request_timeout_s = mj.value("timeout_s", c.model.request_timeout_s);
      c.model.max_retries = mj.value("max_retries", c.model.max_retries);
      c.model.retry_backoff_ms = mj.value("retry_backoff_ms", c.model.retry_backoff_ms);
      if (mj.contains("sampling")) c.model.sampling = mj["sampling"];
    }
    const auto& meta = j.at("meta");
    c.meta.questions.clear();
    for (const auto& q : meta.at("questions")) {
      c.meta.questions.push_back({q.at("id").get<std::string>(), q.at("text").get<std::string>(),
                                  q.at("answer").get<std::string>() == "integer" ? MetaQuestion::Answer::integer
                                                                                 : MetaQuestion::Answer::yes_no});
    }
    c.meta.tft_threshold = meta.at("tft_threshold").get<double>();
    c.meta.forgiving_threshold = meta.at("forgiving_threshold").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config echo: ") + e.what());
  }
}

}  // namespace ipd
