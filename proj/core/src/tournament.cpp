#include "bnmarket/tournament.hpp"

#include <algorithm>
#include <set>

#include "bnmarket/error.hpp"

namespace bnmarket {

std::vector<std::string> TournamentSpec::team_labels() const {
  if (rounds < 2 || rounds > 12) {
    throw MarketError(ErrorCode::kBadSpec, "tournament rounds must be in [2, 12]");
  }
  if (teams.empty()) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= team_count(); ++i) out.push_back("T" + std::to_string(i));
    return out;
  }
  if (teams.size() != team_count()) {
    throw MarketError(ErrorCode::kBadSpec, "tournament with " + std::to_string(rounds) +
                                               " rounds needs " +
                                               std::to_string(team_count()) + " teams");
  }
  if (std::set<std::string>(teams.begin(), teams.end()).size() != teams.size()) {
    throw MarketError(ErrorCode::kBadSpec, "duplicate team label");
  }
  return teams;
}

Tournament build_tournament(const TournamentSpec& spec) {
  const auto labels = spec.team_labels();
  if (spec.preset == TournamentPreset::kSmoothed &&
      !(spec.smoothing > 0.0 && spec.smoothing < 1.0)) {
    throw MarketError(ErrorCode::kBadSpec, "smoothing must be in (0, 1)");
  }
  const std::size_t teams = spec.team_count();
  const std::size_t games = spec.game_count();

  // Team range [lo, hi) that can reach game j.
  std::vector<std::pair<std::size_t, std::size_t>> range(games + 1);
  for (std::size_t j = games; j >= 1; --j) {
    if (2 * j > games) {
      range[j] = {2 * j - teams, 2 * j + 2 - teams};
    } else {
      range[j] = {range[2 * j].first, range[2 * j + 1].second};
    }
  }

  std::vector<VariableSpec> vars;
  for (std::size_t j = 1; j <= games; ++j) {
    VariableSpec v{"X" + std::to_string(j), {}};
    for (std::size_t t = range[j].first; t < range[j].second; ++t) v.domain.push_back(labels[t]);
    vars.push_back(std::move(v));
  }
  auto schema = std::make_shared<const Schema>(std::move(vars));

  std::vector<Dag::Edge> edges;
  for (std::size_t j = 1; 2 * j <= games; ++j) {
    for (std::size_t c : {2 * j, 2 * j + 1}) {
      if (spec.direction == TournamentDirection::kRootToLeaves) {
        edges.emplace_back(j - 1, c - 1);
      } else {
        edges.emplace_back(c - 1, j - 1);
      }
    }
  }
  auto dag = std::make_shared<const Dag>(schema, edges);

  const bool smooth = spec.preset == TournamentPreset::kSmoothed;
  const double eps = spec.smoothing;
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < games; ++k) {
    Cpt shape = Cpt::uniform(*dag, k);
    std::vector<double> table(shape.table().size());
    const std::size_t l = shape.cardinality();
    const std::size_t j = k + 1;
    if (spec.direction == TournamentDirection::kRootToLeaves) {
      if (j == 1) {
        std::fill(table.begin(), table.end(), 1.0 / static_cast<double>(l));
      } else {
        // One parent, game j/2. Parent value t maps to team range[p].first + t.
        const std::size_t p = j / 2;
        const std::size_t pl = range[p].second - range[p].first;
        for (std::size_t t = 0; t < pl; ++t) {
          const std::size_t team = range[p].first + t;
          double* row = table.data() + t * l;
          if (team >= range[j].first && team < range[j].second) {
            const std::size_t hit = team - range[j].first;
            for (std::size_t i = 0; i < l; ++i) {
              row[i] = smooth ? (i == hit ? 1.0 - eps : eps / static_cast<double>(l - 1))
                              : (i == hit ? 1.0 : 0.0);
            }
          } else {
            std::fill(row, row + l, 1.0 / static_cast<double>(l));
          }
        }
      }
    } else {
      // Winner of game j given the winners of its two feeding games: either
      // one of them with equal odds; others are inconsistent.
      if (2 * j > games) {
        std::fill(table.begin(), table.end(), 1.0 / static_cast<double>(l));
      } else {
        const std::size_t a = 2 * j, b = 2 * j + 1;
        const std::size_t la = range[a].second - range[a].first;
        const std::size_t lb = range[b].second - range[b].first;
        for (std::size_t ta = 0; ta < la; ++ta) {
          for (std::size_t tb = 0; tb < lb; ++tb) {
            // Parents sorted ascending: a-1 < b-1, so a's digit is most significant.
            double* row = table.data() + (ta * lb + tb) * l;
            const std::size_t wa = range[a].first + ta - range[j].first;
            const std::size_t wb = range[b].first + tb - range[j].first;
            for (std::size_t i = 0; i < l; ++i) {
              const bool hit = i == wa || i == wb;
              row[i] = smooth ? (hit ? (1.0 - eps) / 2.0 : eps / static_cast<double>(l - 2))
                              : (hit ? 0.5 : 0.0);
            }
          }
        }
      }
    }
    cpts.emplace_back(k, shape.parents(), shape.parent_cards(), l, std::move(table));
  }
  BayesNet net(dag, std::move(cpts));
  TournamentSpec stored = spec;
  stored.teams = labels;
  return Tournament{std::move(stored), dag, std::move(net)};
}

namespace {

std::size_t game_variable(const Tournament& t, std::string_view game) {
  return t.dag->schema().index_of(game);
}

std::string literal(const Tournament& t, std::size_t k, std::string_view team) {
  const Schema& schema = t.dag->schema();
  if (!schema.find_value(k, team)) {
    throw MarketError(ErrorCode::kBadSpec, "team " + std::string(team) +
                                               " cannot reach game " + schema.name(k));
  }
  return schema.name(k) + "=" + std::string(team);
}

}  // namespace

CnfSecurity team_security(const Tournament& t, std::string_view game, std::string_view team) {
  const std::size_t k = game_variable(t, game);
  return parse_security(literal(t, k, team), t.dag->schema_ptr());
}

CnfSecurity parlay_security(const Tournament& t, std::string_view parent_game,
                            std::string_view parent_team, std::string_view child_game,
                            std::string_view child_team) {
  const std::size_t p = game_variable(t, parent_game);
  const std::size_t c = game_variable(t, child_game);
  if (c + 1 != 2 * (p + 1) && c + 1 != 2 * (p + 1) + 1) {
    throw MarketError(ErrorCode::kBadSpec, std::string(child_game) +
                                               " is not a feeding game of " +
                                               std::string(parent_game));
  }
  return parse_security(literal(t, p, parent_team) + " & " + literal(t, c, child_team),
                        t.dag->schema_ptr());
}

}  // namespace bnmarket
