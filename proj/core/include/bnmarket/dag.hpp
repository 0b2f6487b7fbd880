#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bnmarket/schema.hpp"

namespace bnmarket {

using VariableSet = std::vector<std::size_t>;  // sorted, unique indices

/// Directed acyclic graph over a schema's variables.
class Dag {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;  // (from, to)

  // Throws MarketError(kBadSpec) on cycles, self-loops, duplicate edges, or
  // out-of-range endpoints.
  Dag(SchemaPtr schema, const std::vector<Edge>& edges);

  static Dag from_names(SchemaPtr schema,
                        const std::vector<std::pair<std::string, std::string>>& edges);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  std::size_t size() const { return parents_.size(); }

  const VariableSet& parents(std::size_t k) const { return parents_.at(k); }
  const VariableSet& children(std::size_t k) const { return children_.at(k); }
  VariableSet descendants(std::size_t k) const;
  VariableSet ancestors(std::size_t k) const;
  // Pa ∪ Ch ∪ co-parents of children, excluding k itself.
  VariableSet markov_blanket(std::size_t k) const;
  // vars plus all of their ancestors.
  VariableSet ancestral_closure(const VariableSet& vars) const;

  bool has_edge(std::size_t from, std::size_t to) const;
  bool adjacent(std::size_t a, std::size_t b) const {
    return has_edge(a, b) || has_edge(b, a);
  }

  // Every pair of parents of every variable is adjacent.
  bool is_decomposable() const { return decomposable_; }

  // Kahn's algorithm, ties broken by smallest variable index.
  const std::vector<std::size_t>& topological_order() const { return topo_; }
  // Position of each variable within topological_order().
  std::size_t topological_rank(std::size_t k) const { return rank_.at(k); }

  std::vector<Edge> edges() const;
  std::uint64_t structure_hash() const;

 private:
  SchemaPtr schema_;
  std::vector<VariableSet> parents_;
  std::vector<VariableSet> children_;
  std::vector<std::size_t> topo_;
  std::vector<std::size_t> rank_;
  bool decomposable_ = true;
};

struct StructureQueries {
  VariableSet parents;
  VariableSet children;
  VariableSet descendants;
  VariableSet markov_blanket;
};

// Throws MarketError(kUnknownVariable) when x is out of range.
StructureQueries structure_queries(const Dag& dag, std::size_t x);

inline bool is_decomposable(const Dag& dag) { return dag.is_decomposable(); }

bool contains(const VariableSet& set, std::size_t k);

}  // namespace bnmarket
