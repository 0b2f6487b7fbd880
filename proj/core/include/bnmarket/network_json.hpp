#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/tournament.hpp"

namespace bnmarket {

/// A validated market definition, either an explicit network or a preset.
///
/// Explicit form:
///   {"variables":[{"name":"X1","domain":["T1","T2"]}],
///    "edges":[["X1","X2"]],
///    "cpts":{"X2":[{"given":{"X1":"T1"},"row":{"T1":0.5,"T2":0.5}}]}}
/// Omitted cpts (or omitted variables inside cpts) mean uniform rows.
///
/// Preset form:
///   {"preset":"tournament:m=3","teams":[...],"direction":"root_to_leaves",
///    "initial":"consistent_uniform"|"smoothed","smoothing":1e-6}
///
/// Both accept "b" (liquidity, default 1) and "allow_nondecomposable".
struct MarketSpec {
  nlohmann::json source;
  double liquidity = 1.0;
  bool allow_nondecomposable = false;
  std::optional<TournamentSpec> tournament;
  std::shared_ptr<const BayesNet> net;
};

// Throws MarketError(kBadSpec) on malformed or inconsistent input, including
// a non-decomposable DAG without allow_nondecomposable.
MarketSpec parse_market_spec(const nlohmann::json& spec);
MarketSpec parse_market_spec(const std::string& text);

// Preset names look like "tournament:m=3".
TournamentSpec parse_tournament_preset(const std::string& preset);

// Structure plus CPTs in the explicit form above.
nlohmann::json network_to_json(const BayesNet& bn);

// Bit-exact CPT dump: {"X2": [flat table], ...} in CPT row order. Doubles
// round-trip exactly through the JSON writer.
nlohmann::json cpt_tables_to_json(const BayesNet& bn);
BayesNet cpt_tables_from_json(DagPtr dag, const nlohmann::json& tables);

}  // namespace bnmarket
