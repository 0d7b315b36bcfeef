#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ipd/agent_types.hpp"
#include "ipd/config.hpp"
#include "ipd/text_template.hpp"

namespace ipd {

enum class PromptKind { move, plan, critique, meta };

std::string_view to_string(PromptKind k);
std::optional<PromptKind> prompt_kind_from_string(std::string_view s);

/// Section labels every move/plan/critique template must declare, in order.
inline constexpr std::string_view kGameSections[] = {"rules", "identity", "history", "previous_plan",
                                                     "output_instructions"};
/// Section labels of the post-match question template.
inline constexpr std::string_view kMetaSections[] = {"rules", "identity", "history", "questions",
                                                     "output_instructions"};

struct RenderedPrompt {
  PromptKind kind = PromptKind::move;
  std::string text;
  std::vector<std::string> sections;
};

/// "+3", "+0", "-1".
std::string signed_points(int points);

/// One block per match with at least one round:
///   Results of match between player i and player j:
///   Round 1: You chose action_a, opponent chose action_b. Score: +0 for you, +5 for opponent
/// Blocks are separated by a blank line; no trailing newline. Empty input renders "".
std::string render_history_lines(std::span<const MatchRecord> records, PlayerId perspective);

/// The same format for the match a PlayerView is looking at.
std::string render_view_history(const PlayerView& view);

/// Loads and renders the twelve prompt templates (four kinds x three conditions).
class PromptEngine {
 public:
  /// Templates compiled into the binary from templates/.
  static PromptEngine embedded();
  /// Reads `<dir>/<ri|gc|sa>/<move|plan|critique|meta>.txt`. Throws TemplateError
  /// when a file is missing or declares the wrong sections.
  static PromptEngine from_directory(const std::filesystem::path& dir);
  /// from_directory when `dir` is non-empty, embedded() otherwise.
  static PromptEngine load(const std::string& dir);

  RenderedPrompt render_move(const PlayerView& view, const TournamentConfig& config) const;
  RenderedPrompt render_plan(const PlanningContext& ctx, const std::optional<Plan>& previous,
                             const std::optional<Critique>& critique, const TournamentConfig& config) const;
  RenderedPrompt render_critique(const PlanningContext& ctx, const Plan& plan, const TournamentConfig& config) const;
  /// Throws std::invalid_argument for an empty question list or an unfinished match.
  RenderedPrompt render_meta(const MatchRecord& match, PlayerId perspective, int total_score,
                             std::span<const MetaQuestion> questions, const TournamentConfig& config) const;

 private:
  explicit PromptEngine(std::map<std::pair<Condition, PromptKind>, SectionedTemplate> templates);
  static PromptEngine build(const std::map<std::string, std::string>& files, const std::string& origin);
  RenderedPrompt render(Condition c, PromptKind k, const TemplateVars& vars) const;

  std::map<std::pair<Condition, PromptKind>, SectionedTemplate> templates_;
};

struct MoveReply {
  Action action = Action::A;
  bool end_match = false;
  std::string reasoning;
  bool operator==(const MoveReply&) const = default;
};
struct PlanReply {
  std::string plan;
  bool operator==(const PlanReply&) const = default;
};
struct CritiqueReply {
  std::string feedback;
  bool operator==(const CritiqueReply&) const = default;
};
struct MetaReply {
  std::vector<MetaValue> answers;
  bool operator==(const MetaReply&) const = default;
};

using ParsedReply = std::variant<MoveReply, PlanReply, CritiqueReply, MetaReply>;

/// Finds the structured payload in a model reply: the last ```json fenced block
/// (or any fenced block) whose object has `required_key`, else the last balanced
/// {...} object in the text that has it. Reasoning inside <think>...</think> is
/// ignored. Returns nullopt when nothing qualifies.
std::optional<nlohmann::json> extract_payload(std::string_view raw, std::string_view required_key);

/// Reply schemas:
///   move     {"action": "action_a"|"action_b", "end_match": bool, "reasoning": string}
///   plan     {"plan": string}
///   critique {"feedback": string}
///   meta     {"answers": [bool|int, ...]}  one entry per question
/// Throws MalformedReply when no payload qualifies. Action tokens are matched exactly.
MoveReply parse_move_reply(std::string_view raw);
PlanReply parse_plan_reply(std::string_view raw);
CritiqueReply parse_critique_reply(std::string_view raw);
MetaReply parse_meta_reply(std::string_view raw, std::span<const MetaQuestion> questions);
ParsedReply parse_reply(PromptKind kind, std::string_view raw, std::span<const MetaQuestion> questions = {});

/// Fenced JSON reply a well-behaved model would send for `decision`.
std::string format_move_reply(const MoveReply& reply);

}  // namespace ipd
