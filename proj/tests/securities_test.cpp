#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bnmarket/error.hpp"
#include "bnmarket/oracle.hpp"
#include "bnmarket/security.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

namespace bnmarket {
namespace {

using testing::Rng;

const double kE = std::exp(1.0);

SchemaPtr bracket_schema() { return testing::eight_team_bracket().dag->schema_ptr(); }

SchemaPtr binary_schema(std::size_t n) {
  std::vector<VariableSpec> vars;
  for (std::size_t k = 0; k < n; ++k) vars.push_back({"X" + std::to_string(k + 1), {"one", "two"}});
  return std::make_shared<const Schema>(std::move(vars));
}

TEST(Parse, ConjunctionOfTwoLiterals) {
  const CnfSecurity f = parse_security("X2=T1 & X5=T3", bracket_schema());
  ASSERT_EQ(f.clauses().size(), 2u);
  EXPECT_EQ(f.clauses()[0].literals.size(), 1u);
  EXPECT_FALSE(f.clauses()[0].literals[0].negated);
  EXPECT_EQ(f.variables(), (VariableSet{1, 4}));
  EXPECT_EQ(f.source_text(), "X2=T1 & X5=T3");
}

TEST(Parse, ComplementaryLiteralsMakeATautology) {
  auto schema = bracket_schema();
  const CnfSecurity f = parse_security("(X1=T1 | X1!=T1)", schema);
  const JointTable ind(schema, JointTable::Kind::kQuantity, oracle_indicator(f));
  for (std::size_t i = 0; i < ind.size(); ++i) ASSERT_EQ(ind[i], 1.0);
  EXPECT_TRUE(pivotal_variables(f).empty());
}

struct BadInput {
  const char* text;
  ErrorCode code;
  std::size_t offset;
};

TEST(Parse, DiagnosticsCarryByteOffsets) {
  const std::vector<BadInput> cases{
      {"X9=T1", ErrorCode::kUnknownVariable, 0},
      {"X1=T1 & X2=T9", ErrorCode::kBadSpec, 11},
      {"X1=T1 & ()", ErrorCode::kBadSpec, 9},
      {"X1=T1 &", ErrorCode::kBadSpec, 7},
      {"", ErrorCode::kBadSpec, 0},
      {"(X1=T1 | X2=T1", ErrorCode::kBadSpec, 14},
      {"X1==T1", ErrorCode::kBadSpec, 3},
      {"X1=T1 X2=T1", ErrorCode::kBadSpec, 6},
  };
  auto schema = bracket_schema();
  for (const auto& c : cases) {
    try {
      parse_security(c.text, schema);
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.code(), c.code) << c.text;
      EXPECT_EQ(e.offset(), c.offset) << c.text << ": " << e.what();
    }
  }
}

TEST(Parse, CanonicalTextRoundTrips) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto schema = testing::random_schema(rng, 5, 3);
    const std::string text = testing::random_cnf_text(rng, *schema);
    const CnfSecurity f = parse_security(text, schema);
    const CnfSecurity again = parse_security(f.to_string(), schema);
    EXPECT_EQ(again, f);
    EXPECT_EQ(again.to_string(), f.to_string());
  }
}

TEST(Parse, WhitespaceIsInsignificant) {
  auto schema = bracket_schema();
  EXPECT_EQ(parse_security("  ( X1 = T1|X2!=T2 )&X3=T5 ", schema),
            parse_security("(X1=T1 | X2!=T2) & X3=T5", schema));
}

TEST(Eval, ParlayOnBracketOutcomes) {
  auto schema = bracket_schema();
  const CnfSecurity f = parse_security("X2=T1 & X5=T3", schema);
  Valuation v = make_valuation(*schema, {{"X1", "T1"}, {"X2", "T1"}, {"X3", "T5"}, {"X4", "T1"},
                                         {"X5", "T3"}, {"X6", "T5"}, {"X7", "T7"}});
  EXPECT_EQ(eval_formula(f, v), 1);
  v.set(4, schema->value_of(4, "T4"));
  EXPECT_EQ(eval_formula(f, v), 0);
}

TEST(CountModels, SmallCases) {
  auto schema = binary_schema(3);
  EXPECT_EQ(count_models(parse_security("X1=one", schema), Valuation(3)), 4u);
  EXPECT_EQ(count_models(parse_security("(X1=one | X1=two)", schema), Valuation(3)), 8u);
  Valuation fixed(3);
  fixed.set(0, 1);
  EXPECT_EQ(count_models(parse_security("X1=one", schema), fixed), 0u);
}

TEST(CountModels, BracketParlayMatchesDenseCount) {
  auto schema = bracket_schema();
  const CnfSecurity f = parse_security("X2=T1 & X5=T3", schema);
  const auto ind = oracle_indicator(f);
  const double dense = std::accumulate(ind.begin(), ind.end(), 0.0);
  EXPECT_EQ(ind.size(), 2048u);
  EXPECT_EQ(count_models(f, Valuation(7)), static_cast<std::uint64_t>(dense));
}

TEST(CountModels, MatchesEnumerationAndRestrictionIsAdditive) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    auto schema = testing::random_schema(rng, 5, 3);
    const CnfSecurity f = testing::random_cnf(rng, schema);
    Valuation fixed(5);
    if (std::bernoulli_distribution(0.5)(rng)) fixed.set(1, 0);
    const JointTable ind(schema, JointTable::Kind::kQuantity, oracle_indicator(f));
    std::uint64_t brute = 0;
    for (std::size_t i = 0; i < ind.size(); ++i) {
      const Valuation v = ind.outcome(i);
      if (fixed.assigned(1) && v[1] != fixed[1]) continue;
      brute += ind[i] == 1.0;
    }
    EXPECT_EQ(count_models(f, fixed), brute);
    std::uint64_t split = 0;
    for (int i = 0; i < static_cast<int>(schema->domain_size(3)); ++i) {
      Valuation more = fixed;
      more.set(3, i);
      split += count_models(f, more);
    }
    EXPECT_EQ(split, count_models(f, fixed));
  }
}

TEST(CountModels, OverflowIsReported) {
  std::vector<VariableSpec> vars;
  for (int k = 0; k < 70; ++k) vars.push_back({"X" + std::to_string(k), {"a", "b"}});
  auto schema = std::make_shared<const Schema>(std::move(vars));
  try {
    count_models(parse_security("X0=a", schema), Valuation(70));
    FAIL() << "expected size error";
  } catch (const MarketError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSizeLimit);
  }
}

TEST(Pivotal, Examples) {
  auto schema = binary_schema(2);
  EXPECT_EQ(pivotal_variables(parse_security("X1=one", schema)), (VariableSet{0}));
  EXPECT_TRUE(pivotal_variables(parse_security("(X1=one | X1=two)", schema)).empty());
  EXPECT_EQ(pivotal_variables(parse_security("X2=T1 & X5=T3", bracket_schema())),
            (VariableSet{1, 4}));
  // X2 appears but never matters: (X1 | X2) & (X1 | !X2) == X1.
  EXPECT_EQ(pivotal_variables(parse_security("(X1=one | X2=one) & (X1=one | X2!=one)", schema)),
            (VariableSet{0}));
}

TEST(FormulaConditional, ClosedForms) {
  auto one = std::make_shared<const Schema>(std::vector<VariableSpec>{{"X1", {"one", "two"}}});
  const auto row = formula_conditional(parse_security("X1=one", one), 0, Valuation(1));
  EXPECT_NEAR(row[0], kE / (kE + 1), 1e-15);
  EXPECT_NEAR(row[1], 1 / (kE + 1), 1e-15);

  auto two = binary_schema(2);
  Valuation given(2);
  given.set(1, 1);
  const auto cond = formula_conditional(parse_security("X1=one & X2=one", two), 0, given);
  EXPECT_NEAR(cond[0], 0.5, 1e-15);

  const auto taut = formula_conditional(parse_security("(X1=one | X1=two)", two), 1, Valuation(2));
  EXPECT_NEAR(taut[0], 0.5, 1e-15);
}

TEST(FormulaConditional, MatchesDenseFormulaDistribution) {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    auto schema = testing::random_schema(rng, 5, 3);
    const CnfSecurity f = testing::random_cnf(rng, schema);
    const JointTable pr_f = oracle_pr_f(f);
    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
    Valuation given(5);
    for (std::size_t k = 0; k < 5; ++k) {
      if (k != target && std::bernoulli_distribution(0.5)(rng)) {
        given.set(k, std::uniform_int_distribution<int>(
                         0, static_cast<int>(schema->domain_size(k)) - 1)(rng));
      }
    }
    const auto engine = formula_conditional(f, target, given);
    const auto dense = oracle_conditional(pr_f, target, given);
    for (std::size_t i = 0; i < engine.size(); ++i) EXPECT_NEAR(engine[i], dense[i], 1e-12);
  }
}

}  // namespace
}  // namespace bnmarket
