#include <gtest/gtest.h>

#include "ipd/config.hpp"
#include "ipd/errors.hpp"
#include "support.hpp"

namespace ipd {
namespace {

const char* kMinimal = R"(
condition: gc
players: 4
groups:
  - [0, 1]
  - [2, 3]
max_rounds: 6
round_budget: 9
agents:
  default: {kind: tit_for_tat}
  players:
    3: {kind: random, p: 0.25}
)";

TEST(Config, ParsesMinimalFile) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.condition, Condition::GC);
  EXPECT_EQ(c.player_count(), 4);
  EXPECT_EQ(c.group_of(PlayerId{3}), GroupId{1});
  EXPECT_EQ(c.max_rounds, 6);
  EXPECT_EQ(c.round_budget, 9);
  EXPECT_EQ(c.binding(PlayerId{0}).kind, AgentKind::tit_for_tat);
  EXPECT_EQ(c.binding(PlayerId{3}).kind, AgentKind::random);
  EXPECT_DOUBLE_EQ(c.binding(PlayerId{3}).a_probability, 0.25);
  EXPECT_EQ(c.matrix, PayoffMatrix::prompt_default());
  EXPECT_FALSE(c.uses_model());
}

TEST(Config, ConditionBlockAppliesAfterOverride) {
  ConfigOverrides o;
  o.condition = Condition::GC;
  const auto c = load_config(testing::config_path("experiment.yaml"), o);
  EXPECT_EQ(c.condition, Condition::GC);
  EXPECT_EQ(c.round_budget, 25);
  EXPECT_EQ(c.max_rounds, 10);
  EXPECT_EQ(c.planning_interval, 5);
  EXPECT_TRUE(c.uses_model());
}

TEST(Config, OverridesWin) {
  ConfigOverrides o;
  o.seed = 99;
  o.trials = 2;
  o.endpoint = "http://example.invalid:1";
  o.model = "tiny";
  const auto c = load_config(testing::config_path("experiment.yaml"), o);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.trials, 2);
  EXPECT_EQ(c.model.endpoint, "http://example.invalid:1");
  EXPECT_EQ(c.model.model, "tiny");
}

TEST(Config, TablePresetMatrix) {
  const auto c = parse_config(std::string(kMinimal) + "matrix: table_preset\n");
  EXPECT_EQ(c.matrix, PayoffMatrix::table_preset());
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("players: [0, 1]\nbogus: 1\n"), ConfigError);
  EXPECT_THROW(parse_config("players: [0, 1]\ncondition: xx\n"), ConfigError);
  EXPECT_THROW(parse_config("condition: sa\n"), ConfigError);
  EXPECT_THROW(parse_config("players: [0, 1]\nagents: {default: {kind: saint}}\n"), ConfigError);
  EXPECT_THROW(parse_config("players: [0, 1\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/ipd.yaml"), ConfigError);
}

TEST(Config, ValidateChecksMatrixAndGroups) {
  auto c = make_two_group_config(Condition::SA, AgentKind::always_defect, 10, 40);
  EXPECT_NO_THROW(c.validate());
  c.matrix = {3, 5, 0, 1};
  EXPECT_THROW(c.validate(), ConfigError);
  c = make_two_group_config(Condition::GC, AgentKind::always_defect, 10, 25);
  c.groups.erase(PlayerId{4});
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonEchoRoundTrips) {
  auto c = testing::random_scripted_config(5, Condition::SA);
  c.meta = MetaConfig::defaults();
  c.meta.questions.push_back(MetaConfig::total_score_question());
  c.model.sampling = {{"temperature", 0.3}};
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  for (const auto& [p, b] : c.agents) EXPECT_EQ(back.binding(p).kind, b.kind);
  EXPECT_EQ(back.round_budget, c.round_budget);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"experiment.yaml", "scripted_mix.yaml", "oracle_tft_vs_ad.yaml", "bad_budget.yaml"}) {
    EXPECT_NO_THROW(load_config(testing::config_path(name))) << name;
  }
}

}  // namespace
}  // namespace ipd
