#include <gtest/gtest.h>

#include "bnmarket/error.hpp"
#include "bnmarket/lmsr.hpp"
#include "bnmarket/oracle.hpp"
#include "bnmarket/tournament.hpp"
#include "support/fixtures.hpp"

namespace bnmarket {
namespace {

// Every game winner must be one of the two teams that played in it.
bool consistent(const Valuation& v, const Schema& s, std::size_t games) {
  for (std::size_t j = 1; 2 * j <= games; ++j) {
    const std::string& w = s.label(j - 1, v[j - 1]);
    if (w != s.label(2 * j - 1, v[2 * j - 1]) && w != s.label(2 * j, v[2 * j])) return false;
  }
  return true;
}

Tournament bracket(TournamentDirection dir, TournamentPreset preset, int rounds = 3) {
  TournamentSpec spec;
  spec.rounds = rounds;
  spec.direction = dir;
  spec.preset = preset;
  return build_tournament(spec);
}

TEST(Tournament, GameDomains) {
  const Tournament t = testing::eight_team_bracket();
  const Schema& s = t.dag->schema();
  ASSERT_EQ(s.size(), 7u);
  EXPECT_EQ(s.variable(0).domain.size(), 8u);
  EXPECT_EQ(s.variable(1).domain, (std::vector<std::string>{"T1", "T2", "T3", "T4"}));
  EXPECT_EQ(s.variable(2).domain, (std::vector<std::string>{"T5", "T6", "T7", "T8"}));
  EXPECT_EQ(s.variable(3).domain, (std::vector<std::string>{"T1", "T2"}));
  EXPECT_EQ(s.variable(6).domain, (std::vector<std::string>{"T7", "T8"}));
  EXPECT_TRUE(t.dag->has_edge(0, 1));
  EXPECT_TRUE(t.dag->has_edge(2, 6));
  EXPECT_TRUE(t.dag->is_decomposable());
}

TEST(Tournament, CustomTeamLabels) {
  TournamentSpec spec;
  spec.rounds = 2;
  spec.teams = {"ann", "bob", "cat", "dan"};
  const Tournament t = build_tournament(spec);
  EXPECT_EQ(t.dag->schema().variable(2).domain, (std::vector<std::string>{"cat", "dan"}));
  EXPECT_NEAR(price_of(MarketState::create(1.0, t.net), team_security(t, "X1", "dan")), 0.25,
              1e-15);
}

TEST(Tournament, BadSpecs) {
  TournamentSpec spec;
  spec.rounds = 1;
  EXPECT_THROW(build_tournament(spec), MarketError);
  spec.rounds = 13;
  EXPECT_THROW(build_tournament(spec), MarketError);
  spec.rounds = 2;
  spec.teams = {"a", "b", "c"};
  EXPECT_THROW(build_tournament(spec), MarketError);
  spec.teams = {"a", "b", "c", "a"};
  EXPECT_THROW(build_tournament(spec), MarketError);
  spec.teams = {};
  spec.preset = TournamentPreset::kSmoothed;
  spec.smoothing = 0.0;
  EXPECT_THROW(build_tournament(spec), MarketError);
}

class BothDirections : public ::testing::TestWithParam<TournamentDirection> {};

TEST_P(BothDirections, ConsistentOutcomesAreEquiprobable) {
  const Tournament t = bracket(GetParam(), TournamentPreset::kConsistentUniform);
  const JointTable joint = densify(t.net);
  std::size_t consistent_count = 0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const Valuation v = joint.outcome(i);
    if (consistent(v, t.dag->schema(), 7)) {
      ++consistent_count;
      EXPECT_NEAR(joint[i], 1.0 / 128.0, 1e-15);
    } else {
      EXPECT_EQ(joint[i], 0.0);
    }
  }
  EXPECT_EQ(consistent_count, 128u);
}

TEST_P(BothDirections, EveryTeamWinsWithOneEighth) {
  const Tournament t = bracket(GetParam(), TournamentPreset::kConsistentUniform);
  const MarketState ms = MarketState::create(1.0, t.net);
  for (const auto& team : t.spec.teams) {
    EXPECT_NEAR(price_of(ms, team_security(t, "X1", team)), 0.125, 1e-15);
    EXPECT_NEAR(price_of(ms, team_security(t, team <= "T4" ? "X2" : "X3", team)), 0.25, 1e-15);
  }
}

TEST_P(BothDirections, SmoothedHasFullSupport) {
  const Tournament t = bracket(GetParam(), TournamentPreset::kSmoothed);
  EXPECT_TRUE(t.net.strictly_positive());
  const JointTable joint = densify(t.net);
  double inconsistent = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    EXPECT_GT(joint[i], 0.0);
    if (!consistent(joint.outcome(i), t.dag->schema(), 7)) inconsistent += joint[i];
  }
  EXPECT_LT(inconsistent, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Tournament, BothDirections,
                         ::testing::Values(TournamentDirection::kRootToLeaves,
                                           TournamentDirection::kLeavesToRoot));

TEST(Tournament, LeavesToRootIsNotDecomposable) {
  const Tournament t =
      bracket(TournamentDirection::kLeavesToRoot, TournamentPreset::kConsistentUniform);
  EXPECT_FALSE(t.dag->is_decomposable());
  EXPECT_TRUE(t.dag->has_edge(1, 0));
}

TEST(Tournament, Securities) {
  const Tournament t = testing::eight_team_bracket();
  const CnfSecurity parlay = parlay_security(t, "X1", "T1", "X2", "T1");
  EXPECT_EQ(parlay.to_string(), "X1=T1 & X2=T1");
  EXPECT_TRUE(is_compatible(parlay, *t.dag).compatible);
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const MarketError& e) {
      return e.code();
    }
    return ErrorCode::kStaleQuote;
  };
  EXPECT_EQ(code([&] { team_security(t, "X4", "T3"); }), ErrorCode::kBadSpec);
  EXPECT_EQ(code([&] { team_security(t, "X9", "T1"); }), ErrorCode::kUnknownVariable);
  EXPECT_EQ(code([&] { parlay_security(t, "X1", "T1", "X4", "T1"); }), ErrorCode::kBadSpec);
}

TEST(Tournament, LargerBracketsScale) {
  const Tournament t =
      bracket(TournamentDirection::kRootToLeaves, TournamentPreset::kConsistentUniform, 6);
  EXPECT_EQ(t.dag->size(), 63u);
  const MarketState ms = MarketState::create(1.0, t.net);
  EXPECT_NEAR(price_of(ms, team_security(t, "X1", "T37")), 1.0 / 64.0, 1e-15);
  EXPECT_NEAR(price_of(ms, parlay_security(t, "X1", "T37", "X3", "T37")), 1.0 / 64.0, 1e-15);
}

}  // namespace
}  // namespace bnmarket
