#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/security.hpp"

namespace bnmarket::testing {

using Rng = std::mt19937_64;

inline SchemaPtr random_schema(Rng& rng, std::size_t n, std::size_t max_domain) {
  std::uniform_int_distribution<std::size_t> card(2, max_domain);
  std::vector<VariableSpec> vars;
  for (std::size_t k = 0; k < n; ++k) {
    VariableSpec v{"X" + std::to_string(k + 1), {}};
    const std::size_t l = card(rng);
    for (std::size_t i = 0; i < l; ++i) v.domain.push_back("v" + std::to_string(i));
    vars.push_back(std::move(v));
  }
  return std::make_shared<const Schema>(std::move(vars));
}

// Grows a decomposable DAG one vertex at a time: each new vertex picks an
// earlier vertex u and takes a random subset of Pa(u) ∪ {u} as parents, which
// keeps every parent set a clique. Indices are shuffled afterwards so the
// topological order is not the index order.
inline DagPtr random_decomposable_dag(Rng& rng, SchemaPtr schema) {
  const std::size_t n = schema->size();
  std::vector<std::vector<std::size_t>> parents(n);
  std::bernoulli_distribution coin(0.6);
  for (std::size_t v = 1; v < n; ++v) {
    if (!coin(rng)) continue;
    const std::size_t u = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
    std::vector<std::size_t> pool = parents[u];
    pool.push_back(u);
    for (std::size_t p : pool) {
      if (coin(rng) || p == u) parents[v].push_back(p);
    }
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Dag::Edge> edges;
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p : parents[v]) edges.emplace_back(perm[p], perm[v]);
  }
  return std::make_shared<const Dag>(schema, edges);
}

// Any DAG: random edges respecting a shuffled order.
inline DagPtr random_dag(Rng& rng, SchemaPtr schema, double density = 0.4) {
  const std::size_t n = schema->size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(density);
  std::vector<Dag::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(order[i], order[j]);
    }
  }
  return std::make_shared<const Dag>(schema, edges);
}

// zero_rate > 0 plants exact zeros (never a whole row).
inline BayesNet random_net(Rng& rng, DagPtr dag, double zero_rate = 0.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution zero(zero_rate);
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < dag->size(); ++k) {
    Cpt shape = Cpt::uniform(*dag, k);
    const std::size_t l = shape.cardinality();
    std::vector<double> table(shape.table().size());
    for (std::size_t ctx = 0; ctx < shape.context_count(); ++ctx) {
      double z = 0.0;
      const std::size_t keep = std::uniform_int_distribution<std::size_t>(0, l - 1)(rng);
      for (std::size_t i = 0; i < l; ++i) {
        double x = u(rng);
        if (i != keep && zero_rate > 0.0 && zero(rng)) x = 0.0;
        table[ctx * l + i] = x;
        z += x;
      }
      for (std::size_t i = 0; i < l; ++i) table[ctx * l + i] /= z;
    }
    cpts.emplace_back(k, shape.parents(), shape.parent_cards(), l, std::move(table));
  }
  return BayesNet(std::move(dag), std::move(cpts));
}

// 1-4 clauses of 1-3 literals over random variables.
inline std::string random_cnf_text(Rng& rng, const Schema& schema, std::size_t max_clauses = 4,
                                   std::size_t max_literals = 3) {
  std::uniform_int_distribution<std::size_t> nclauses(1, max_clauses);
  std::uniform_int_distribution<std::size_t> nlits(1, max_literals);
  std::uniform_int_distribution<std::size_t> var(0, schema.size() - 1);
  std::bernoulli_distribution neg(0.25);
  std::string out;
  const std::size_t c = nclauses(rng);
  for (std::size_t i = 0; i < c; ++i) {
    if (i) out += " & ";
    const std::size_t l = nlits(rng);
    if (l > 1) out += "(";
    for (std::size_t j = 0; j < l; ++j) {
      if (j) out += " | ";
      const std::size_t k = var(rng);
      const std::size_t value =
          std::uniform_int_distribution<std::size_t>(0, schema.domain_size(k) - 1)(rng);
      out += schema.name(k) + (neg(rng) ? "!=" : "=") + schema.label(k, static_cast<int>(value));
    }
    if (l > 1) out += ")";
  }
  return out;
}

inline CnfSecurity random_cnf(Rng& rng, SchemaPtr schema, std::size_t max_clauses = 4,
                              std::size_t max_literals = 3) {
  return parse_security(random_cnf_text(rng, *schema, max_clauses, max_literals), schema);
}

}  // namespace bnmarket::testing
