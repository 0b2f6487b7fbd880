#include "bnmarket/network_json.hpp"

#include <charconv>

#include <cmath>

#include "bnmarket/error.hpp"

namespace bnmarket {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& detail) {
  throw MarketError(ErrorCode::kBadSpec, detail);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

std::string as_string(const json& j, const std::string& what) {
  if (!j.is_string()) bad(what + " must be a string");
  return j.get<std::string>();
}

double as_number(const json& j, const std::string& what) {
  if (!j.is_number()) bad(what + " must be a number");
  return j.get<double>();
}

SchemaPtr schema_from_json(const json& variables) {
  if (!variables.is_array()) bad("'variables' must be an array");
  std::vector<VariableSpec> specs;
  for (const json& v : variables) {
    if (!v.is_object()) bad("each variable must be an object");
    VariableSpec s;
    s.name = as_string(require(v, "name"), "variable name");
    const json& domain = require(v, "domain");
    if (!domain.is_array()) bad("domain of " + s.name + " must be an array");
    for (const json& d : domain) s.domain.push_back(as_string(d, "domain label"));
    specs.push_back(std::move(s));
  }
  return std::make_shared<const Schema>(std::move(specs));
}

DagPtr dag_from_json(SchemaPtr schema, const json& spec) {
  std::vector<std::pair<std::string, std::string>> edges;
  if (auto it = spec.find("edges"); it != spec.end()) {
    if (!it->is_array()) bad("'edges' must be an array");
    for (const json& e : *it) {
      if (!e.is_array() || e.size() != 2) bad("each edge must be a [from, to] pair");
      edges.emplace_back(as_string(e[0], "edge endpoint"), as_string(e[1], "edge endpoint"));
    }
  }
  try {
    return std::make_shared<const Dag>(Dag::from_names(std::move(schema), edges));
  } catch (const MarketError& e) {
    if (e.code() == ErrorCode::kUnknownVariable) bad(e.what());
    throw;
  }
}

Cpt cpt_from_rows(const Dag& dag, std::size_t k, const json& rows) {
  const Schema& schema = dag.schema();
  Cpt shape = Cpt::uniform(dag, k);
  const std::size_t l = shape.cardinality();
  std::vector<double> table(shape.table().size(), 0.0);
  std::vector<bool> seen(shape.context_count(), false);
  if (!rows.is_array()) bad("cpts of " + schema.name(k) + " must be an array");
  for (const json& entry : rows) {
    if (!entry.is_object()) bad("each cpt entry must be an object");
    Valuation v(schema.size());
    if (auto g = entry.find("given"); g != entry.end()) {
      if (!g->is_object()) bad("'given' must be an object");
      for (const auto& [name, value] : g->items()) {
        auto p = schema.find(name);
        if (!p || !contains(shape.parents(), *p)) {
          bad("'given' of " + schema.name(k) + " names non-parent " + name);
        }
        v.set(*p, schema.value_of(*p, as_string(value, "given value")));
      }
    }
    for (std::size_t p : shape.parents()) {
      if (!v.assigned(p)) bad("'given' of " + schema.name(k) + " misses parent " + schema.name(p));
    }
    const std::size_t ctx = shape.context_index(v);
    if (seen[ctx]) bad("duplicate context in cpts of " + schema.name(k));
    seen[ctx] = true;
    const json& row = require(entry, "row");
    if (row.is_array()) {
      if (row.size() != l) bad("row of " + schema.name(k) + " has wrong length");
      for (std::size_t i = 0; i < l; ++i) table[ctx * l + i] = as_number(row[i], "probability");
    } else if (row.is_object()) {
      for (const auto& [label, p] : row.items()) {
        const int i = schema.value_of(k, label);
        table[ctx * l + static_cast<std::size_t>(i)] = as_number(p, "probability");
      }
    } else {
      bad("row must be an object or array");
    }
  }
  for (std::size_t ctx = 0; ctx < seen.size(); ++ctx) {
    if (!seen[ctx]) {
      Valuation v(schema.size());
      shape.decode_context(ctx, v);
      bad("cpts of " + schema.name(k) + " miss context " + to_string(schema, v));
    }
  }
  return Cpt(k, shape.parents(), shape.parent_cards(), l, std::move(table));
}

}  // namespace

TournamentSpec parse_tournament_preset(const std::string& preset) {
  constexpr std::string_view prefix = "tournament:m=";
  if (preset.rfind(prefix, 0) != 0) bad("unknown preset '" + preset + "'");
  const char* first = preset.data() + prefix.size();
  const char* last = preset.data() + preset.size();
  int m = 0;
  auto [ptr, ec] = std::from_chars(first, last, m);
  if (ec != std::errc() || ptr != last) bad("bad round count in preset '" + preset + "'");
  TournamentSpec spec;
  spec.rounds = m;
  return spec;
}

MarketSpec parse_market_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  return parse_market_spec(j);
}

MarketSpec parse_market_spec(const json& spec) {
  if (!spec.is_object()) bad("market spec must be a JSON object");
  MarketSpec out;
  out.source = spec;
  if (auto it = spec.find("b"); it != spec.end()) {
    out.liquidity = as_number(*it, "'b'");
    if (!(out.liquidity > 0.0) || !std::isfinite(out.liquidity)) bad("'b' must be positive");
  }
  if (auto it = spec.find("allow_nondecomposable"); it != spec.end()) {
    if (!it->is_boolean()) bad("'allow_nondecomposable' must be a boolean");
    out.allow_nondecomposable = it->get<bool>();
  }

  if (auto p = spec.find("preset"); p != spec.end()) {
    TournamentSpec t = parse_tournament_preset(as_string(*p, "'preset'"));
    if (auto it = spec.find("teams"); it != spec.end()) {
      if (!it->is_array()) bad("'teams' must be an array");
      for (const json& team : *it) t.teams.push_back(as_string(team, "team label"));
    }
    if (auto it = spec.find("direction"); it != spec.end()) {
      const std::string d = as_string(*it, "'direction'");
      if (d == "root_to_leaves") {
        t.direction = TournamentDirection::kRootToLeaves;
      } else if (d == "leaves_to_root") {
        t.direction = TournamentDirection::kLeavesToRoot;
      } else {
        bad("'direction' must be root_to_leaves or leaves_to_root");
      }
    }
    if (auto it = spec.find("initial"); it != spec.end()) {
      const std::string init = as_string(*it, "'initial'");
      if (init == "consistent_uniform") {
        t.preset = TournamentPreset::kConsistentUniform;
      } else if (init == "smoothed") {
        t.preset = TournamentPreset::kSmoothed;
      } else {
        bad("'initial' must be consistent_uniform or smoothed");
      }
    }
    if (auto it = spec.find("smoothing"); it != spec.end()) {
      t.smoothing = as_number(*it, "'smoothing'");
    }
    Tournament built = build_tournament(t);
    out.tournament = built.spec;
    out.net = std::make_shared<const BayesNet>(std::move(built.net));
  } else {
    SchemaPtr schema = schema_from_json(require(spec, "variables"));
    DagPtr dag = dag_from_json(schema, spec);
    std::vector<Cpt> cpts;
    const json* given = nullptr;
    if (auto it = spec.find("cpts"); it != spec.end()) {
      if (!it->is_object()) bad("'cpts' must be an object");
      given = &*it;
      for (const auto& [name, rows] : it->items()) {
        if (!schema->find(name)) bad("cpts name unknown variable " + name);
      }
    }
    for (std::size_t k = 0; k < schema->size(); ++k) {
      if (given && given->contains(schema->name(k))) {
        cpts.push_back(cpt_from_rows(*dag, k, given->at(schema->name(k))));
      } else {
        cpts.push_back(Cpt::uniform(*dag, k));
      }
    }
    out.net = std::make_shared<const BayesNet>(dag, std::move(cpts));
  }

  if (!out.net->dag().is_decomposable() && !out.allow_nondecomposable) {
    bad("DAG is not decomposable; set allow_nondecomposable to serve approximate trades");
  }
  return out;
}

json network_to_json(const BayesNet& bn) {
  const Schema& schema = bn.schema();
  json out;
  out["variables"] = json::array();
  for (const auto& v : schema.variables()) {
    out["variables"].push_back({{"name", v.name}, {"domain", v.domain}});
  }
  out["edges"] = json::array();
  for (auto [a, b] : bn.dag().edges()) {
    out["edges"].push_back({schema.name(a), schema.name(b)});
  }
  json cpts = json::object();
  for (const Cpt& c : bn.cpts()) {
    json rows = json::array();
    Valuation v(schema.size());
    for (std::size_t ctx = 0; ctx < c.context_count(); ++ctx) {
      c.decode_context(ctx, v);
      json given = json::object();
      for (std::size_t p : c.parents()) given[schema.name(p)] = schema.label(p, v[p]);
      json row = json::object();
      for (std::size_t i = 0; i < c.cardinality(); ++i) {
        row[schema.label(c.variable(), static_cast<int>(i))] = c.row(ctx)[i];
      }
      rows.push_back({{"given", std::move(given)}, {"row", std::move(row)}});
    }
    cpts[schema.name(c.variable())] = std::move(rows);
  }
  out["cpts"] = std::move(cpts);
  return out;
}

json cpt_tables_to_json(const BayesNet& bn) {
  json out = json::object();
  for (const Cpt& c : bn.cpts()) out[bn.schema().name(c.variable())] = c.table();
  return out;
}

BayesNet cpt_tables_from_json(DagPtr dag, const json& tables) {
  if (!tables.is_object()) bad("CPT tables must be an object");
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < dag->size(); ++k) {
    Cpt shape = Cpt::uniform(*dag, k);
    const json& t = require(tables, dag->schema().name(k).c_str());
    if (!t.is_array() || t.size() != shape.table().size()) {
      bad("CPT table of " + dag->schema().name(k) + " has wrong size");
    }
    std::vector<double> table;
    table.reserve(t.size());
    for (const json& x : t) table.push_back(as_number(x, "probability"));
    cpts.emplace_back(k, shape.parents(), shape.parent_cards(), shape.cardinality(),
                      std::move(table));
  }
  return BayesNet(std::move(dag), std::move(cpts));
}

}  // namespace bnmarket
