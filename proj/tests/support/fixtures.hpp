#pragma once

#include <memory>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/tournament.hpp"

namespace bnmarket::testing {

// X1 -> X3 <- X2, binary with labels yes/no. X1 and X2 are fair coins;
// X3 = yes with probability 1/4 when both parents are yes, 1/2 otherwise.
inline BayesNet collider_net() {
  auto schema = std::make_shared<const Schema>(std::vector<VariableSpec>{
      {"X1", {"yes", "no"}}, {"X2", {"yes", "no"}}, {"X3", {"yes", "no"}}});
  auto dag = std::make_shared<const Dag>(
      Dag::from_names(schema, {{"X1", "X3"}, {"X2", "X3"}}));
  std::vector<Cpt> cpts{
      make_cpt(*dag, 0, {0.5, 0.5}),
      make_cpt(*dag, 1, {0.5, 0.5}),
      // contexts (X1, X2): (yes,yes) (yes,no) (no,yes) (no,no)
      make_cpt(*dag, 2, {0.25, 0.75, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}),
  };
  return BayesNet(dag, std::move(cpts));
}

// The eight-team bracket: X1 is the final, X4..X7 the first round.
inline Tournament eight_team_bracket(
    TournamentPreset preset = TournamentPreset::kConsistentUniform) {
  TournamentSpec spec;
  spec.rounds = 3;
  spec.preset = preset;
  return build_tournament(spec);
}

}  // namespace bnmarket::testing
