#include <gtest/gtest.h>

#include "bnmarket/error.hpp"
#include "bnmarket/oracle.hpp"
#include "bnmarket/security.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

namespace bnmarket {
namespace {

using testing::Rng;

TEST(Compatibility, ParlayIsCompatibleWithBracket) {
  const Tournament t = testing::eight_team_bracket();
  const CnfSecurity f = parse_security("X2=T1 & X5=T3", t.dag->schema_ptr());
  const CompatReport r = is_compatible(f, *t.dag);
  EXPECT_TRUE(r.compatible);
  EXPECT_FALSE(r.witness.has_value());
  EXPECT_TRUE(clique_scoped(f, *t.dag));
}

TEST(Compatibility, ThreeGameConjunctionHasThePublishedWitness) {
  const Tournament t = testing::eight_team_bracket();
  const Schema& s = t.dag->schema();
  const CnfSecurity f = parse_security("X2=T1 & X5=T3 & X3=T8", t.dag->schema_ptr());
  const CompatReport r = is_compatible(f, *t.dag);
  ASSERT_FALSE(r.compatible);
  ASSERT_TRUE(r.witness.has_value());
  const CompatWitness& w = *r.witness;
  EXPECT_EQ(w.variable, s.index_of("X5"));
  EXPECT_EQ(s.label(w.variable, w.value1), "T3");
  EXPECT_EQ(s.label(w.variable, w.value2), "T4");
  EXPECT_EQ(to_string(s, w.blanket), "[X2=T1]");
  EXPECT_EQ(w.inside[s.index_of("X3")], s.value_of(s.index_of("X3"), "T8"));
  EXPECT_EQ(w.outside[s.index_of("X3")], s.value_of(s.index_of("X3"), "T5"));
  EXPECT_TRUE(verify_witness(f, w));
  EXPECT_EQ(describe_witness(f, w), "k=X5 i1=T3 i2=T4 v=[X2=T1] u=[X3=T8] w=[X3=T5]");
}

TEST(Compatibility, EverythingIsCompatibleWithACompleteDag) {
  Rng rng(41);
  auto schema = testing::random_schema(rng, 4, 3);
  std::vector<Dag::Edge> edges;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) edges.emplace_back(a, b);
  }
  const Dag g(schema, edges);
  for (int trial = 0; trial < 50; ++trial) {
    EXPECT_TRUE(is_compatible(testing::random_cnf(rng, schema), g).compatible);
  }
}

TEST(CliqueScoped, BracketExamples) {
  const Tournament t = testing::eight_team_bracket();
  auto schema = t.dag->schema_ptr();
  EXPECT_TRUE(clique_scoped(parse_security("X2=T1 & X5=T3", schema), *t.dag));
  EXPECT_FALSE(clique_scoped(parse_security("X2=T1 & X3=T5", schema), *t.dag));
  EXPECT_TRUE(clique_scoped(parse_security("(X6=T5 | X6!=T6)", schema), *t.dag));
}

TEST(CliqueScoped, RequiresDecomposableDag) {
  const BayesNet collider = testing::collider_net();
  const CnfSecurity f = parse_security("X3=yes", collider.dag().schema_ptr());
  try {
    clique_scoped(f, collider.dag());
    FAIL() << "expected bad_spec";
  } catch (const MarketError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadSpec);
  }
}

TEST(Compatibility, AgreesWithDenseLocalMarkovTest) {
  Rng rng(42);
  int compatible = 0, incompatible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto schema = testing::random_schema(rng, std::uniform_int_distribution<std::size_t>(2, 5)(rng), 3);
    auto g = trial % 2 ? testing::random_dag(rng, schema) : testing::random_decomposable_dag(rng, schema);
    const CnfSecurity f = testing::random_cnf(rng, schema);
    const CompatReport r = is_compatible(f, *g);
    EXPECT_EQ(r.compatible, oracle_local_markov(oracle_pr_f(f), *g, 1e-12)) << f.to_string();
    if (r.compatible) {
      ++compatible;
    } else {
      ++incompatible;
      ASSERT_TRUE(r.witness.has_value());
      EXPECT_TRUE(verify_witness(f, *r.witness)) << describe_witness(f, *r.witness);
    }
  }
  EXPECT_GT(compatible, 30);
  EXPECT_GT(incompatible, 30);
}

TEST(Compatibility, CliqueScopeImpliesCompatibility) {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    auto schema = testing::random_schema(rng, 6, 3);
    auto g = testing::random_decomposable_dag(rng, schema);
    const CnfSecurity f = testing::random_cnf(rng, schema, 2, 2);
    if (clique_scoped(f, *g)) EXPECT_TRUE(is_compatible(f, *g).compatible);
  }
}

TEST(Compatibility, TooManyVariablesIsRefused) {
  std::vector<VariableSpec> vars;
  std::string text;
  for (int k = 0; k < 26; ++k) {
    vars.push_back({"X" + std::to_string(k), {"a", "b"}});
    text += (k ? " & " : "") + std::string("X") + std::to_string(k) + "=a";
  }
  auto schema = std::make_shared<const Schema>(std::move(vars));
  // A chain: not a clique, so the fast path does not apply.
  std::vector<Dag::Edge> edges;
  for (std::size_t k = 0; k + 1 < 26; ++k) edges.emplace_back(k, k + 1);
  const Dag g(schema, edges);
  try {
    is_compatible(parse_security(text, schema), g);
    FAIL() << "expected compat_check_too_large";
  } catch (const MarketError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCompatCheckTooLarge);
  }
}

}  // namespace
}  // namespace bnmarket
