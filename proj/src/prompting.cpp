#include "ipd/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ipd/errors.hpp"

namespace ipd {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

namespace {

using nlohmann::json;

constexpr Condition kConditions[] = {Condition::RI, Condition::GC, Condition::SA};
constexpr PromptKind kKinds[] = {PromptKind::move, PromptKind::plan, PromptKind::critique, PromptKind::meta};

std::string points(int value) { return std::to_string(value) + (value == 1 || value == -1 ? " point" : " points"); }

std::string group_listing(const TournamentConfig& config) {
  if (config.condition == Condition::RI) return "";
  std::map<GroupId, std::vector<PlayerId>> members;
  for (const auto& p : config.players) {
    if (auto g = config.group_of(p)) members[*g].push_back(p);
  }
  std::ostringstream out;
  bool first_group = true;
  for (const auto& [g, ps] : members) {
    if (!first_group) out << "; ";
    first_group = false;
    out << "Group " << g.value << ": player" << (ps.size() == 1 ? " " : "s ");
    for (std::size_t i = 0; i < ps.size(); ++i) out << (i ? ", " : "") << ps[i].value;
  }
  return out.str();
}

TemplateVars common_vars(const TournamentConfig& config, PlayerId self, std::optional<GroupId> self_group,
                         std::optional<int> remaining_budget, int total_score) {
  const auto& m = config.matrix;
  TemplateVars v;
  v["points_mutual_a"] = points(m.mutual_a);
  v["points_mutual_b"] = points(m.mutual_b);
  v["points_lone_a"] = points(m.lone_a);
  v["points_lone_b"] = points(m.lone_b);
  v["max_rounds"] = std::to_string(config.max_rounds);
  v["round_budget"] = config.round_budget ? std::to_string(*config.round_budget) : "";
  v["remaining_budget"] =
      config.show_remaining_budget && remaining_budget ? std::to_string(*remaining_budget) : "";
  v["group_listing"] = group_listing(config);
  v["self_id"] = std::to_string(self.value);
  v["self_group"] = config.condition != Condition::RI && self_group ? std::to_string(self_group->value) : "";
  v["total_score"] = std::to_string(total_score);
  return v;
}

std::string history_block(PlayerId a, PlayerId b, std::span<const ViewRound> rounds) {
  std::ostringstream out;
  out << "Results of match between player " << a.value << " and player " << b.value << ":";
  int index = 1;
  for (const auto& r : rounds) {
    out << "\nRound " << index++ << ": You chose " << to_token(r.own) << ", opponent chose " << to_token(r.opponent)
        << ". Score: " << signed_points(r.own_points) << " for you, " << signed_points(r.opponent_points)
        << " for opponent";
  }
  return out.str();
}

std::vector<ViewRound> rounds_from(const MatchRecord& match, PlayerId perspective) {
  const int me = match.side_of(perspective);
  std::vector<ViewRound> out;
  out.reserve(match.rounds.size());
  for (const auto& r : match.rounds) {
    out.push_back({r.actions[me], r.actions[1 - me], r.payoffs[me], r.payoffs[1 - me]});
  }
  return out;
}

std::string strip_think(std::string_view raw) {
  std::string text(raw);
  for (;;) {
    const auto open = text.find("<think>");
    if (open == std::string::npos) break;
    const auto close = text.find("</think>", open);
    if (close == std::string::npos) break;
    text.erase(open, close + 8 - open);
  }
  return text;
}

std::optional<json> as_object_with(const std::string& candidate, std::string_view key) {
  auto parsed = json::parse(candidate, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains(key)) return std::nullopt;
  return parsed;
}

std::size_t matching_brace(const std::string& text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string required_text(const json& payload, const char* key, const char* what) {
  const auto& v = payload.at(key);
  if (!v.is_string()) throw MalformedReply(std::string(what) + ": '" + key + "' must be a string");
  auto text = trim(v.get<std::string>());
  if (text.empty()) throw MalformedReply(std::string(what) + ": '" + key + "' is empty");
  return text;
}

}  // namespace

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::move: return "move";
    case PromptKind::plan: return "plan";
    case PromptKind::critique: return "critique";
    case PromptKind::meta: return "meta";
  }
  return "?";
}

std::optional<PromptKind> prompt_kind_from_string(std::string_view s) {
  for (auto k : kKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string signed_points(int value) { return (value >= 0 ? "+" : "") + std::to_string(value); }

std::string render_history_lines(std::span<const MatchRecord> records, PlayerId perspective) {
  std::string out;
  for (const auto& match : records) {
    if (match.rounds.empty()) continue;
    if (!out.empty()) out += "\n\n";
    const auto rounds = rounds_from(match, perspective);
    out += history_block(match.players[0], match.players[1], rounds);
  }
  return out;
}

std::string render_view_history(const PlayerView& view) {
  if (view.current_match_rounds.empty() || !view.match_players) return "";
  return history_block((*view.match_players)[0], (*view.match_players)[1], view.current_match_rounds);
}

PromptEngine::PromptEngine(std::map<std::pair<Condition, PromptKind>, SectionedTemplate> templates)
    : templates_(std::move(templates)) {}

PromptEngine PromptEngine::build(const std::map<std::string, std::string>& files, const std::string& origin) {
  std::map<std::pair<Condition, PromptKind>, SectionedTemplate> templates;
  for (auto c : kConditions) {
    for (auto k : kKinds) {
      const std::string rel = std::string(to_string(c)) + "/" + std::string(to_string(k)) + ".txt";
      auto it = files.find(rel);
      if (it == files.end()) throw TemplateError(origin + ": missing template " + rel);
      auto t = SectionedTemplate::parse(it->second, rel);
      const auto expected = k == PromptKind::meta ? std::span<const std::string_view>(kMetaSections)
                                                  : std::span<const std::string_view>(kGameSections);
      if (!std::equal(t.labels().begin(), t.labels().end(), expected.begin(), expected.end())) {
        std::string want;
        for (auto s : expected) want += std::string(want.empty() ? "" : ", ") + std::string(s);
        throw TemplateError(rel + ": sections must be, in order: " + want);
      }
      templates.emplace(std::make_pair(c, k), std::move(t));
    }
  }
  return PromptEngine(std::move(templates));
}

PromptEngine PromptEngine::embedded() { return build(detail::embedded_templates(), "embedded templates"); }

PromptEngine PromptEngine::from_directory(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (auto c : kConditions) {
    for (auto k : kKinds) {
      const std::string rel = std::string(to_string(c)) + "/" + std::string(to_string(k)) + ".txt";
      std::ifstream in(dir / rel);
      if (!in) throw TemplateError("cannot read template " + (dir / rel).string());
      std::ostringstream buf;
      buf << in.rdbuf();
      files[rel] = buf.str();
    }
  }
  return build(files, dir.string());
}

PromptEngine PromptEngine::load(const std::string& dir) { return dir.empty() ? embedded() : from_directory(dir); }

RenderedPrompt PromptEngine::render(Condition c, PromptKind k, const TemplateVars& vars) const {
  const auto& t = templates_.at({c, k});
  return RenderedPrompt{k, t.render(vars), t.labels()};
}

RenderedPrompt PromptEngine::render_move(const PlayerView& view, const TournamentConfig& config) const {
  auto vars = common_vars(config, view.self, view.self_group, view.remaining_budget, view.total_score);
  if (view.masked) {
    vars["opponent_id"] = "unknown";
    vars["opponent_group"] = "unknown";
  } else {
    vars["opponent_id"] = view.opponent ? std::to_string(view.opponent->value) : "unknown";
    vars["opponent_group"] = config.condition != Condition::RI && view.opponent_group
                                 ? std::to_string(view.opponent_group->value)
                                 : "";
  }
  vars["history"] = render_view_history(view);
  vars["plan"] = view.current_plan ? view.current_plan->text() : "";
  return render(config.condition, PromptKind::move, vars);
}

RenderedPrompt PromptEngine::render_plan(const PlanningContext& ctx, const std::optional<Plan>& previous,
                                         const std::optional<Critique>& critique,
                                         const TournamentConfig& config) const {
  auto vars = common_vars(config, ctx.self, ctx.self_group, ctx.remaining_budget, ctx.total_score);
  vars["history"] = render_history_lines(ctx.own_matches, ctx.self);
  vars["plan"] = previous ? previous->text() : "";
  vars["critique"] = critique ? critique->text() : "";
  return render(config.condition, PromptKind::plan, vars);
}

RenderedPrompt PromptEngine::render_critique(const PlanningContext& ctx, const Plan& plan,
                                             const TournamentConfig& config) const {
  auto vars = common_vars(config, ctx.self, ctx.self_group, ctx.remaining_budget, ctx.total_score);
  vars["history"] = render_history_lines(ctx.own_matches, ctx.self);
  vars["plan"] = plan.text();
  return render(config.condition, PromptKind::critique, vars);
}

RenderedPrompt PromptEngine::render_meta(const MatchRecord& match, PlayerId perspective, int total_score,
                                         std::span<const MetaQuestion> questions,
                                         const TournamentConfig& config) const {
  if (questions.empty()) throw std::invalid_argument("render_meta: no questions to ask");
  if (!match.finished()) throw std::invalid_argument("render_meta: match is not complete");
  const auto opponent = match.opponent_of(perspective);
  auto vars = common_vars(config, perspective, config.group_of(perspective), std::nullopt, total_score);
  vars["opponent_id"] = std::to_string(opponent.value);
  const auto og = config.group_of(opponent);
  vars["opponent_group"] = config.condition != Condition::RI && og ? std::to_string(og->value) : "";
  vars["history"] = render_history_lines(std::span(&match, 1), perspective);
  std::ostringstream qs;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (i) qs << '\n';
    qs << 'Q' << (i + 1) << ". " << questions[i].text << " [answer: "
       << (questions[i].answer == MetaQuestion::Answer::integer ? "integer" : "true or false") << "]";
  }
  vars["questions"] = qs.str();
  vars["question_count"] = std::to_string(questions.size());
  return render(config.condition, PromptKind::meta, vars);
}

std::optional<json> extract_payload(std::string_view raw, std::string_view required_key) {
  const std::string text = strip_think(raw);

  std::optional<json> fenced;
  std::size_t pos = 0;
  for (;;) {
    const auto open = text.find("```", pos);
    if (open == std::string::npos) break;
    const auto line_end = text.find('\n', open);
    if (line_end == std::string::npos) break;
    const auto close = text.find("```", line_end + 1);
    if (close == std::string::npos) break;
    if (auto obj = as_object_with(text.substr(line_end + 1, close - line_end - 1), required_key)) fenced = obj;
    pos = close + 3;
  }
  if (fenced) return fenced;

  std::optional<json> loose;
  for (std::size_t open = text.find('{'); open != std::string::npos; open = text.find('{', open + 1)) {
    const auto close = matching_brace(text, open);
    if (close == std::string::npos) continue;
    if (auto obj = as_object_with(text.substr(open, close - open + 1), required_key)) loose = obj;
  }
  return loose;
}

MoveReply parse_move_reply(std::string_view raw) {
  auto payload = extract_payload(raw, "action");
  if (!payload) throw MalformedReply("move reply: no JSON object with an \"action\" field");
  const auto& action = payload->at("action");
  if (!action.is_string()) throw MalformedReply("move reply: \"action\" must be a string");
  auto parsed = action_from_token(action.get<std::string>());
  if (!parsed) throw MalformedReply("move reply: invalid action '" + action.get<std::string>() + "'");
  MoveReply reply;
  reply.action = *parsed;
  if (payload->contains("end_match")) {
    const auto& e = payload->at("end_match");
    if (!e.is_boolean()) throw MalformedReply("move reply: \"end_match\" must be true or false");
    reply.end_match = e.get<bool>();
  }
  if (payload->contains("reasoning") && payload->at("reasoning").is_string())
    reply.reasoning = payload->at("reasoning").get<std::string>();
  return reply;
}

PlanReply parse_plan_reply(std::string_view raw) {
  auto payload = extract_payload(raw, "plan");
  if (!payload) throw MalformedReply("plan reply: no JSON object with a \"plan\" field");
  return {required_text(*payload, "plan", "plan reply")};
}

CritiqueReply parse_critique_reply(std::string_view raw) {
  auto payload = extract_payload(raw, "feedback");
  if (!payload) throw MalformedReply("critique reply: no JSON object with a \"feedback\" field");
  return {required_text(*payload, "feedback", "critique reply")};
}

MetaReply parse_meta_reply(std::string_view raw, std::span<const MetaQuestion> questions) {
  auto payload = extract_payload(raw, "answers");
  if (!payload) throw MalformedReply("meta reply: no JSON object with an \"answers\" field");
  const auto& answers = payload->at("answers");
  if (!answers.is_array() || answers.size() != questions.size())
    throw MalformedReply("meta reply: expected " + std::to_string(questions.size()) + " answers");
  MetaReply reply;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& a = answers[i];
    if (questions[i].answer == MetaQuestion::Answer::integer) {
      if (a.is_number_integer()) {
        reply.answers.emplace_back(a.get<int>());
      } else if (a.is_number_float() && a.get<double>() == static_cast<double>(static_cast<int>(a.get<double>()))) {
        reply.answers.emplace_back(static_cast<int>(a.get<double>()));
      } else {
        throw MalformedReply("meta reply: answer " + std::to_string(i + 1) + " must be an integer");
      }
      continue;
    }
    if (a.is_boolean()) {
      reply.answers.emplace_back(a.get<bool>());
      continue;
    }
    if (a.is_string()) {
      std::string s = a.get<std::string>();
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "true" || s == "yes") {
        reply.answers.emplace_back(true);
        continue;
      }
      if (s == "false" || s == "no") {
        reply.answers.emplace_back(false);
        continue;
      }
    }
    throw MalformedReply("meta reply: answer " + std::to_string(i + 1) + " must be true or false");
  }
  return reply;
}

ParsedReply parse_reply(PromptKind kind, std::string_view raw, std::span<const MetaQuestion> questions) {
  switch (kind) {
    case PromptKind::move: return parse_move_reply(raw);
    case PromptKind::plan: return parse_plan_reply(raw);
    case PromptKind::critique: return parse_critique_reply(raw);
    case PromptKind::meta: return parse_meta_reply(raw, questions);
  }
  throw std::invalid_argument("unknown prompt kind");
}

std::string format_move_reply(const MoveReply& reply) {
  json payload = {{"action", to_token(reply.action)}, {"end_match", reply.end_match}, {"reasoning", reply.reasoning}};
  return "```json\n" + payload.dump() + "\n```";
}

}  // namespace ipd
