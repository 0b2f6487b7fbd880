#include <gtest/gtest.h>

#include <cmath>

#include "bnmarket/error.hpp"
#include "bnmarket/oracle.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

namespace bnmarket {
namespace {

using testing::Rng;

SchemaPtr one_variable(std::size_t outcomes) {
  VariableSpec v{"X1", {}};
  for (std::size_t i = 0; i < outcomes; ++i) v.domain.push_back("o" + std::to_string(i));
  return std::make_shared<const Schema>(std::vector<VariableSpec>{v});
}

TEST(Densify, UniformNetIsConstant) {
  const Tournament t = testing::eight_team_bracket();
  const JointTable d = densify(BayesNet::uniform(t.dag));
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_DOUBLE_EQ(d[i], 1.0 / 2048);
}

TEST(Densify, ColliderTable) {
  const JointTable d = densify(testing::collider_net());
  ASSERT_EQ(d.size(), 8u);
  EXPECT_DOUBLE_EQ(d[0], 1.0 / 16);  // all yes: index 0 with yes first
  EXPECT_DOUBLE_EQ(d[1], 3.0 / 16);
}

TEST(Densify, RefitRecoversCpts) {
  Rng rng(51);
  auto schema = testing::random_schema(rng, 5, 3);
  auto dag = testing::random_dag(rng, schema);
  const BayesNet bn = testing::random_net(rng, dag);
  const BayesNet refit = oracle_fit(densify(bn), dag);
  for (std::size_t k = 0; k < bn.size(); ++k) {
    const auto& a = bn.cpt(k).table();
    const auto& b = refit.cpt(k).table();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Densify, SizeGuard) {
  std::vector<VariableSpec> vars;
  for (int k = 0; k < 21; ++k) vars.push_back({"X" + std::to_string(k), {"a", "b"}});
  auto schema = std::make_shared<const Schema>(std::move(vars));
  auto dag = std::make_shared<const Dag>(schema, std::vector<Dag::Edge>{});
  try {
    densify(BayesNet::uniform(dag));
    FAIL() << "expected size error";
  } catch (const MarketError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSizeLimit);
  }
}

TEST(Cost, ZeroQuantitiesGiveLogN) {
  auto schema = one_variable(4);
  const JointTable q = JointTable::filled(schema, JointTable::Kind::kQuantity, 0.0);
  EXPECT_NEAR(oracle_cost(q, 1.0), std::log(4.0), 1e-15);
  const JointTable p = oracle_prices(q, 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], 0.25);
}

TEST(Cost, PricesFromQuantities) {
  auto schema = one_variable(2);
  for (double b : {0.5, 1.0, 7.0}) {
    const JointTable q(schema, JointTable::Kind::kQuantity, {b * std::log(3.0), 0.0});
    const JointTable p = oracle_prices(q, b);
    EXPECT_NEAR(p[0], 0.75, 1e-15);
    EXPECT_NEAR(p[1], 0.25, 1e-15);
  }
}

TEST(Cost, PricesAreTranslationInvariantAndNormalized) {
  Rng rng(52);
  auto schema = testing::random_schema(rng, 4, 3);
  std::vector<double> raw(JointTable::checked_size(*schema));
  std::normal_distribution<double> n(0.0, 3.0);
  for (double& x : raw) x = n(rng);
  const JointTable q(schema, JointTable::Kind::kQuantity, raw);
  for (double& x : raw) x += 12.5;
  const JointTable shifted(schema, JointTable::Kind::kQuantity, raw);
  const JointTable p = oracle_prices(q, 2.0);
  EXPECT_LE(max_abs_difference(p, oracle_prices(shifted, 2.0)), 1e-15);
  double total = 0.0;
  for (double x : p.values()) total += x;
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Trade, TautologyShiftsCostByDeltaB) {
  const Tournament t = testing::eight_team_bracket();
  const CnfSecurity f = parse_security("(X1=T1 | X1!=T1)", t.dag->schema_ptr());
  const JointTable q = quantities_from_prices(densify(BayesNet::uniform(t.dag)), 3.0);
  const OracleTrade r = oracle_trade(q, f, 0.8, 3.0);
  EXPECT_NEAR(r.cost, 0.8 * 3.0, 1e-12);
  EXPECT_LE(max_abs_difference(oracle_prices(r.quantities, 3.0), oracle_prices(q, 3.0)), 1e-15);
  const OracleTrade none = oracle_trade(q, f, 0.0, 3.0);
  EXPECT_EQ(none.cost, 0.0);
}

TEST(Trade, ZeroPriceOutcomesStayZero) {
  const Tournament t = testing::eight_team_bracket();
  const JointTable p = densify(t.net);
  const JointTable q = quantities_from_prices(p, 1.0);
  const CnfSecurity f = parse_security("X4=T2", t.dag->schema_ptr());
  const JointTable post = oracle_prices(oracle_trade(q, f, 2.0, 1.0).quantities, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) EXPECT_EQ(post[i], 0.0);
  }
}

TEST(FormulaDistribution, SingleBinaryVariable) {
  auto schema = one_variable(2);
  const JointTable pr_f = oracle_pr_f(parse_security("X1=o0", schema));
  const double e = std::exp(1.0);
  EXPECT_NEAR(pr_f[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(pr_f[1], 1 / (e + 1), 1e-15);
}

TEST(LogOp, DenseIdempotence) {
  const JointTable p = densify(testing::collider_net());
  EXPECT_LE(max_abs_difference(oracle_logop(p, 0.5, p, 0.5), p), 1e-15);
}

TEST(LocalMarkov, HoldsForEveryDensifiedNet) {
  Rng rng(53);
  for (int trial = 0; trial < 30; ++trial) {
    auto schema = testing::random_schema(rng, 5, 3);
    auto dag = testing::random_dag(rng, schema);
    EXPECT_TRUE(oracle_local_markov(densify(testing::random_net(rng, dag)), *dag, 1e-12));
  }
}

TEST(LocalMarkov, DetectsDependenceTheDagCannotCarry) {
  const BayesNet collider = testing::collider_net();
  const Dag edgeless(collider.dag().schema_ptr(), {});
  EXPECT_FALSE(oracle_local_markov(densify(collider), edgeless));
}

TEST(Golden, RoundTripsBitExactly) {
  Rng rng(54);
  auto schema = testing::random_schema(rng, 4, 3);
  const JointTable p = densify(testing::random_net(rng, testing::random_dag(rng, schema)));
  const std::string text = to_golden(p);
  const JointTable back = from_golden(schema, text);
  EXPECT_EQ(back.values(), p.values());
  EXPECT_EQ(text.substr(0, 2), "[[");
}

}  // namespace
}  // namespace bnmarket
