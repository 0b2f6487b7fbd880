#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/security.hpp"

namespace bnmarket {

enum class TournamentPreset {
  kConsistentUniform,  // inconsistent outcomes get probability 0
  kSmoothed,           // ε mass on inconsistent outcomes, full support
};

enum class TournamentDirection {
  kRootToLeaves,  // X_j -> X_2j, X_j -> X_2j+1; decomposable
  kLeavesToRoot,  // X_2j -> X_j, X_2j+1 -> X_j; not decomposable
};

/// Single-elimination bracket with 2^rounds teams. Game j (1-based) is played
/// by the winners of games 2j and 2j+1; first-round games sit at the leaves.
struct TournamentSpec {
  int rounds = 3;
  std::vector<std::string> teams;  // empty means T1..T{2^rounds}
  TournamentPreset preset = TournamentPreset::kConsistentUniform;
  TournamentDirection direction = TournamentDirection::kRootToLeaves;
  double smoothing = 1e-6;

  std::size_t team_count() const { return std::size_t{1} << rounds; }
  std::size_t game_count() const { return team_count() - 1; }
  // Throws MarketError(kBadSpec) on bad round counts or team lists.
  std::vector<std::string> team_labels() const;
};

struct Tournament {
  TournamentSpec spec;
  DagPtr dag;
  BayesNet net;

  // Variable index of game j (1-based, so game 1 is the final).
  static std::size_t game_index(std::size_t game) { return game - 1; }
};

Tournament build_tournament(const TournamentSpec& spec);

// Game names are X1..X{2^m-1}; teams by label.
CnfSecurity team_security(const Tournament& t, std::string_view game, std::string_view team);
// Requires child_game to be a tree child of parent_game.
CnfSecurity parlay_security(const Tournament& t, std::string_view parent_game,
                            std::string_view parent_team, std::string_view child_game,
                            std::string_view child_team);

}  // namespace bnmarket
