#include <gtest/gtest.h>

#include "bnmarket/error.hpp"
#include "bnmarket/network_json.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

namespace bnmarket {
namespace {

using nlohmann::json;

const char* kCollider = R"({
  "b": 2.5,
  "variables": [{"name": "X1", "domain": ["yes", "no"]},
                {"name": "X2", "domain": ["yes", "no"]},
                {"name": "X3", "domain": ["yes", "no"]}],
  "edges": [["X1", "X3"], ["X2", "X3"]],
  "allow_nondecomposable": true,
  "cpts": {
    "X3": [{"given": {"X1": "yes", "X2": "yes"}, "row": {"yes": 0.25, "no": 0.75}},
           {"given": {"X1": "yes", "X2": "no"}, "row": [0.5, 0.5]},
           {"given": {"X1": "no", "X2": "yes"}, "row": [0.5, 0.5]},
           {"given": {"X1": "no", "X2": "no"}, "row": [0.5, 0.5]}]
  }
})";

std::string error_of(const std::string& text) {
  try {
    parse_market_spec(text);
  } catch (const MarketError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadSpec) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

TEST(MarketSpec, ExplicitNetwork) {
  const MarketSpec spec = parse_market_spec(std::string(kCollider));
  EXPECT_EQ(spec.liquidity, 2.5);
  EXPECT_TRUE(spec.allow_nondecomposable);
  EXPECT_FALSE(spec.tournament);
  const BayesNet expected = testing::collider_net();
  EXPECT_EQ(spec.net->cpts(), expected.cpts());
  EXPECT_EQ(spec.net->dag().structure_hash(), expected.dag().structure_hash());
}

TEST(MarketSpec, OmittedCptsAreUniform) {
  const MarketSpec spec = parse_market_spec(std::string(
      R"({"variables":[{"name":"A","domain":["x","y","z"]},{"name":"B","domain":["p","q"]}],
          "edges":[["A","B"]]})"));
  EXPECT_EQ(spec.liquidity, 1.0);
  EXPECT_EQ(spec.net->cpt(0).table(), std::vector<double>(3, 1.0 / 3.0));
  EXPECT_EQ(spec.net->cpt(1).table(), std::vector<double>(6, 0.5));
}

TEST(MarketSpec, TournamentPreset) {
  const MarketSpec spec = parse_market_spec(std::string(
      R"({"preset":"tournament:m=2","teams":["a","b","c","d"],"initial":"smoothed",
          "smoothing":0.01,"b":4})"));
  ASSERT_TRUE(spec.tournament);
  EXPECT_EQ(spec.tournament->rounds, 2);
  EXPECT_EQ(spec.tournament->preset, TournamentPreset::kSmoothed);
  EXPECT_EQ(spec.liquidity, 4.0);
  EXPECT_TRUE(spec.net->strictly_positive());
  EXPECT_EQ(spec.net->schema().variable(1).domain, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(parse_tournament_preset("tournament:m=5").rounds, 5);
}

TEST(MarketSpec, LeavesToRootNeedsOptIn) {
  EXPECT_NE(error_of(R"({"preset":"tournament:m=3","direction":"leaves_to_root"})")
                .find("not decomposable"),
            std::string::npos);
  const MarketSpec ok = parse_market_spec(std::string(
      R"({"preset":"tournament:m=3","direction":"leaves_to_root","allow_nondecomposable":true})"));
  EXPECT_FALSE(ok.net->dag().is_decomposable());
}

TEST(MarketSpec, Rejections) {
  error_of("{not json");
  error_of("[1, 2]");
  error_of(R"({"edges":[]})");
  error_of(R"({"variables":[{"name":"A","domain":["x"]}],"b":0})");
  error_of(R"({"variables":[{"name":"A","domain":["x"]}],"b":"1"})");
  error_of(R"({"variables":[{"name":"A","domain":["x","x"]}]})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]}],"edges":[["A","Z"]]})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]}],"edges":[["A","A"]]})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]}],"cpts":{"B":[]}})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]}],"cpts":{"A":[{"row":[0.5,0.6]}]}})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]}],"cpts":{"A":[{"row":[1]}]}})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]}],
               "cpts":{"A":[{"row":[0.5,0.5]},{"row":[0.5,0.5]}]}})");
  error_of(R"({"variables":[{"name":"A","domain":["x","y"]},{"name":"B","domain":["x","y"]}],
               "edges":[["A","B"]],"cpts":{"B":[{"given":{"A":"x"},"row":[0.5,0.5]}]}})");
  error_of(R"({"preset":"tournament:m=1"})");
  error_of(R"({"preset":"tournament:m=3x"})");
  error_of(R"({"preset":"league"})");
  error_of(R"({"preset":"tournament:m=2","teams":["a"]})");
  error_of(R"({"preset":"tournament:m=2","initial":"random"})");
  error_of(R"({"preset":"tournament:m=2","direction":"sideways"})");
}

TEST(NetworkJson, RoundTripsThroughExplicitForm) {
  testing::Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    auto schema = testing::random_schema(rng, 5, 3);
    const BayesNet bn = testing::random_net(rng, testing::random_dag(rng, schema), 0.2);
    json doc = network_to_json(bn);
    doc["allow_nondecomposable"] = true;
    const MarketSpec back = parse_market_spec(doc);
    EXPECT_EQ(back.net->cpts(), bn.cpts());
    EXPECT_EQ(back.net->dag().structure_hash(), bn.dag().structure_hash());
  }
}

TEST(NetworkJson, CptTablesAreBitExact) {
  testing::Rng rng(72);
  for (int trial = 0; trial < 50; ++trial) {
    auto schema = testing::random_schema(rng, 5, 4);
    const BayesNet bn = testing::random_net(rng, testing::random_dag(rng, schema));
    const json dumped = json::parse(cpt_tables_to_json(bn).dump());
    const BayesNet back = cpt_tables_from_json(bn.dag_ptr(), dumped);
    EXPECT_EQ(back.cpts(), bn.cpts());
  }
  const BayesNet bn = testing::collider_net();
  json tables = cpt_tables_to_json(bn);
  tables["X3"].erase(0);
  EXPECT_THROW(cpt_tables_from_json(bn.dag_ptr(), tables), MarketError);
}

}  // namespace
}  // namespace bnmarket
