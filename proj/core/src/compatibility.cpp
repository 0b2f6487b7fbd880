#include <algorithm>
#include <functional>
#include <sstream>

#include "bnmarket/error.hpp"
#include "bnmarket/security.hpp"
#include "enumerate.hpp"

namespace bnmarket {

namespace {

using Pattern = std::vector<std::uint8_t>;

// F(X_k = i, rest) for every value i of X_k.
Pattern flip_pattern(const CnfSecurity& f, std::size_t k, std::size_t l, Valuation& v) {
  Pattern bits(l);
  for (std::size_t i = 0; i < l; ++i) {
    v.set(k, static_cast<int>(i));
    bits[i] = f.evaluate(v.values()) ? 1 : 0;
  }
  return bits;
}

bool is_constant(const Pattern& p) {
  return std::adjacent_find(p.begin(), p.end(), std::not_equal_to<>()) == p.end();
}

// Equal pairwise differences: identical patterns, or both constant.
bool same_differences(const Pattern& a, const Pattern& b) {
  return a == b || (is_constant(a) && is_constant(b));
}

Valuation restrict_to(const Valuation& v, const VariableSet& vars) {
  Valuation out(v.size());
  for (std::size_t k : vars) out.set(k, v[k]);
  return out;
}

}  // namespace

CompatReport is_compatible(const CnfSecurity& f, const Dag& dag) {
  const Schema& schema = f.schema();
  if (dag.is_decomposable() && clique_scoped(f, dag)) return {};
  if (f.variables().size() > kMaxCompatVariables) {
    throw MarketError(ErrorCode::kCompatCheckTooLarge,
                      "compatibility check too large: security uses " +
                          std::to_string(f.variables().size()) + " variables");
  }
  auto space = detail::space_size(schema, f.variables());
  if (!space || *space > (std::uint64_t{1} << 32)) {
    throw MarketError(ErrorCode::kCompatCheckTooLarge,
                      "compatibility check too large: assignment space over 2^32");
  }

  // Reverse topological order, restricted to the formula's variables.
  const auto& topo = dag.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const std::size_t k = *it;
    if (!contains(f.variables(), k)) continue;
    const std::size_t l = schema.domain_size(k);

    const VariableSet blanket_all = dag.markov_blanket(k);
    VariableSet blanket, outside;
    for (std::size_t j : f.variables()) {
      if (j == k) continue;
      (contains(blanket_all, j) ? blanket : outside).push_back(j);
    }
    if (outside.empty()) continue;

    Valuation v(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) v.set(j, 0);
    std::optional<CompatWitness> witness;
    detail::for_each_assignment(schema, blanket, v, [&](const Valuation&) {
      std::optional<Pattern> reference;
      Valuation reference_ctx;
      detail::for_each_assignment(schema, outside, v, [&](const Valuation&) {
        Pattern bits = flip_pattern(f, k, l, v);
        if (!reference) {
          reference = std::move(bits);
          reference_ctx = restrict_to(v, outside);
          return true;
        }
        if (same_differences(*reference, bits)) return true;
        // Find the first value pair whose flip differs between the contexts.
        for (std::size_t i1 = 0; i1 < l; ++i1) {
          for (std::size_t i2 = i1 + 1; i2 < l; ++i2) {
            const int d_ref = int((*reference)[i1]) - int((*reference)[i2]);
            const int d_cur = int(bits[i1]) - int(bits[i2]);
            if (d_ref == d_cur) continue;
            CompatWitness w{k, static_cast<int>(i1), static_cast<int>(i2),
                            restrict_to(v, blanket), reference_ctx,
                            restrict_to(v, outside)};
            // Report the flipping context as u when only one of them flips.
            if (d_ref == 0) std::swap(w.inside, w.outside);
            witness = std::move(w);
            return false;
          }
        }
        return true;
      });
      return !witness.has_value();
    });
    if (witness) return {false, std::move(witness)};
  }
  return {};
}

bool verify_witness(const CnfSecurity& f, const CompatWitness& w) {
  const Schema& schema = f.schema();
  auto build = [&](const Valuation& context, int value) {
    Valuation v(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) v.set(j, 0);
    for (std::size_t j : w.blanket.assigned_variables()) v.set(j, w.blanket[j]);
    for (std::size_t j : context.assigned_variables()) v.set(j, context[j]);
    v.set(w.variable, value);
    return v;
  };
  const int d_inside = eval_formula(f, build(w.inside, w.value1)) -
                       eval_formula(f, build(w.inside, w.value2));
  const int d_outside = eval_formula(f, build(w.outside, w.value1)) -
                        eval_formula(f, build(w.outside, w.value2));
  return d_inside != d_outside;
}

std::string describe_witness(const CnfSecurity& f, const CompatWitness& w) {
  const Schema& s = f.schema();
  std::ostringstream os;
  os << "k=" << s.name(w.variable) << " i1=" << s.label(w.variable, w.value1)
     << " i2=" << s.label(w.variable, w.value2) << " v=" << to_string(s, w.blanket)
     << " u=" << to_string(s, w.inside) << " w=" << to_string(s, w.outside);
  return os.str();
}

bool clique_scoped(const CnfSecurity& f, const Dag& dag) {
  if (!dag.is_decomposable()) {
    throw MarketError(ErrorCode::kBadSpec, "clique scope test needs a decomposable DAG");
  }
  const auto& vars = f.variables();
  for (std::size_t a = 0; a < vars.size(); ++a) {
    for (std::size_t b = a + 1; b < vars.size(); ++b) {
      if (!dag.adjacent(vars[a], vars[b])) return false;
    }
  }
  return true;
}

}  // namespace bnmarket
