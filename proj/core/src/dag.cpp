#include "bnmarket/dag.hpp"

#include <algorithm>
#include <queue>

#include "bnmarket/error.hpp"

namespace bnmarket {

bool contains(const VariableSet& set, std::size_t k) {
  return std::binary_search(set.begin(), set.end(), k);
}

Dag::Dag(SchemaPtr schema, const std::vector<Edge>& edges)
    : schema_(std::move(schema)) {
  if (!schema_) throw MarketError(ErrorCode::kBadSpec, "dag without schema");
  const std::size_t n = schema_->size();
  parents_.resize(n);
  children_.resize(n);
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) {
      throw MarketError(ErrorCode::kBadSpec, "edge endpoint out of range");
    }
    if (from == to) {
      throw MarketError(ErrorCode::kBadSpec,
                        "self-loop on " + schema_->name(from));
    }
    if (contains(parents_[to], from)) {
      throw MarketError(ErrorCode::kBadSpec, "duplicate edge " +
                                                 schema_->name(from) + "->" +
                                                 schema_->name(to));
    }
    parents_[to].insert(
        std::lower_bound(parents_[to].begin(), parents_[to].end(), from), from);
    children_[from].insert(
        std::lower_bound(children_[from].begin(), children_[from].end(), to), to);
  }

  std::vector<std::size_t> indegree(n);
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t k = 0; k < n; ++k) {
    indegree[k] = parents_[k].size();
    if (indegree[k] == 0) ready.push(k);
  }
  while (!ready.empty()) {
    std::size_t k = ready.top();
    ready.pop();
    topo_.push_back(k);
    for (std::size_t c : children_[k]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (topo_.size() != n) throw MarketError(ErrorCode::kBadSpec, "graph has a cycle");
  rank_.resize(n);
  for (std::size_t r = 0; r < n; ++r) rank_[topo_[r]] = r;

  for (std::size_t k = 0; k < n && decomposable_; ++k) {
    const auto& pa = parents_[k];
    for (std::size_t a = 0; a < pa.size() && decomposable_; ++a) {
      for (std::size_t b = a + 1; b < pa.size(); ++b) {
        if (!adjacent(pa[a], pa[b])) {
          decomposable_ = false;
          break;
        }
      }
    }
  }
}

Dag Dag::from_names(SchemaPtr schema,
                    const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<Edge> idx;
  idx.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    idx.emplace_back(schema->index_of(a), schema->index_of(b));
  }
  return Dag(std::move(schema), idx);
}

bool Dag::has_edge(std::size_t from, std::size_t to) const {
  return contains(parents_.at(to), from);
}

namespace {

VariableSet reach(const std::vector<VariableSet>& next, std::size_t start) {
  std::vector<bool> seen(next.size(), false);
  std::vector<std::size_t> stack(next[start].begin(), next[start].end());
  while (!stack.empty()) {
    std::size_t k = stack.back();
    stack.pop_back();
    if (seen[k]) continue;
    seen[k] = true;
    stack.insert(stack.end(), next[k].begin(), next[k].end());
  }
  VariableSet out;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (seen[k]) out.push_back(k);
  }
  return out;
}

}  // namespace

VariableSet Dag::descendants(std::size_t k) const {
  return reach(children_, k);
}

VariableSet Dag::ancestors(std::size_t k) const { return reach(parents_, k); }

VariableSet Dag::markov_blanket(std::size_t k) const {
  VariableSet out = parents_.at(k);
  for (std::size_t c : children_[k]) {
    out.push_back(c);
    for (std::size_t p : parents_[c]) {
      if (p != k) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

VariableSet Dag::ancestral_closure(const VariableSet& vars) const {
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack(vars.begin(), vars.end());
  while (!stack.empty()) {
    std::size_t k = stack.back();
    stack.pop_back();
    if (seen[k]) continue;
    seen[k] = true;
    stack.insert(stack.end(), parents_[k].begin(), parents_[k].end());
  }
  VariableSet out;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (seen[k]) out.push_back(k);
  }
  return out;
}

std::vector<Dag::Edge> Dag::edges() const {
  std::vector<Edge> out;
  for (std::size_t to = 0; to < size(); ++to) {
    for (std::size_t from : parents_[to]) out.emplace_back(from, to);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t Dag::structure_hash() const {
  // FNV-1a over names, domains and edges.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto& var : schema_->variables()) {
    mix(var.name);
    for (const auto& label : var.domain) mix(label);
  }
  for (const auto& [a, b] : edges()) {
    mix(std::to_string(a) + ">" + std::to_string(b));
  }
  return h;
}

StructureQueries structure_queries(const Dag& dag, std::size_t x) {
  if (x >= dag.size()) {
    throw MarketError(ErrorCode::kUnknownVariable, "variable index out of range");
  }
  return {dag.parents(x), dag.children(x), dag.descendants(x),
          dag.markov_blanket(x)};
}

}  // namespace bnmarket
