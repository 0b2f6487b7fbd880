#include "bnmarket/updater.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bnmarket/error.hpp"
#include "bnmarket/factor.hpp"
#include "bnmarket/inference.hpp"

namespace bnmarket {

namespace {

double pow0(double x, double w) {
  if (x == 0.0) return w == 0.0 ? 1.0 : 0.0;
  return std::pow(x, w);
}

// Family potential tables, one optional per variable. An empty slot means the
// variable's potential is its input CPT.
using Potentials = std::vector<std::optional<std::vector<double>>>;

// Turns a product of family potentials over a decomposable DAG back into
// CPTs. Variables are visited in reverse topological order; each per-context
// normalizer is a function of Pa(X_k), which is a clique, so it folds into the
// family of the topologically last parent, which is visited later. Variables
// with no potential and no folded normalizer keep their input rows verbatim.
BayesNet renormalize_decomposable(const BayesNet& base, Potentials psi) {
  const Dag& dag = base.dag();
  const Schema& schema = base.schema();
  const std::size_t n = base.size();
  std::vector<std::optional<Cpt>> out(n);

  const auto& topo = dag.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const std::size_t k = *it;
    const Cpt& input = base.cpt(k);
    if (!psi[k]) {
      out[k] = input;
      continue;
    }
    std::vector<double> table = std::move(*psi[k]);
    const std::size_t l = input.cardinality();
    const std::size_t contexts = input.context_count();
    std::vector<double> normalizer(contexts, 0.0);
    for (std::size_t ctx = 0; ctx < contexts; ++ctx) {
      double z = 0.0;
      for (std::size_t i = 0; i < l; ++i) z += table[ctx * l + i];
      normalizer[ctx] = z;
      if (z > 0.0 && std::isfinite(z)) {
        for (std::size_t i = 0; i < l; ++i) table[ctx * l + i] /= z;
      } else {
        // Zero-support context: keep the input row.
        std::copy(input.row(ctx).begin(), input.row(ctx).end(),
                  table.begin() + static_cast<std::ptrdiff_t>(ctx * l));
        normalizer[ctx] = 0.0;
      }
    }
    out[k] = Cpt(k, input.parents(), input.parent_cards(), l, std::move(table));

    const auto& parents = dag.parents(k);
    if (parents.empty()) continue;
    const double scale = *std::max_element(normalizer.begin(), normalizer.end());
    if (scale > 0.0) {
      for (double& z : normalizer) z /= scale;
    }
    const std::size_t last = *std::max_element(
        parents.begin(), parents.end(),
        [&](std::size_t a, std::size_t b) { return dag.topological_rank(a) < dag.topological_rank(b); });
    for (std::size_t p : parents) {
      if (p != last && !dag.has_edge(p, last)) {
        throw MarketError(ErrorCode::kNotStructurePreserving,
                          "parents of " + schema.name(k) + " are not a clique");
      }
    }
    // Fold the normalizer into the last parent's family potential.
    const Cpt& target = base.cpt(last);
    if (!psi[last]) psi[last] = target.table();
    auto& family = *psi[last];
    Valuation v(n);
    const std::size_t tl = target.cardinality();
    for (std::size_t ctx = 0; ctx < target.context_count(); ++ctx) {
      target.decode_context(ctx, v);
      for (std::size_t i = 0; i < tl; ++i) {
        v.set(last, static_cast<int>(i));
        family[ctx * tl + i] *= normalizer[input.context_index(v)];
      }
    }
  }

  std::vector<Cpt> cpts;
  cpts.reserve(n);
  for (auto& c : out) cpts.push_back(std::move(*c));
  return BayesNet(base.dag_ptr(), std::move(cpts));
}

// M-projection of the potential product onto the DAG: each touched variable
// gets the family conditional of the product, computed by exact elimination.
BayesNet project_potentials(const BayesNet& base, const Potentials& psi,
                            const VariableSet& touched) {
  const std::size_t n = base.size();
  std::vector<Factor> factors;
  for (std::size_t k = 0; k < n; ++k) {
    const Cpt& c = base.cpt(k);
    if (psi[k]) {
      factors.push_back(Factor::from_cpt(
          Cpt(k, c.parents(), c.parent_cards(), c.cardinality(), *psi[k])));
    } else {
      factors.push_back(Factor::from_cpt(c));
    }
  }
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < n; ++k) {
    const Cpt& input = base.cpt(k);
    if (!contains(touched, k)) {
      cpts.push_back(input);
      continue;
    }
    VariableSet family = input.parents();
    family.push_back(k);
    std::sort(family.begin(), family.end());
    const Factor marginal = eliminate_all_but(factors, family);
    std::vector<double> table(input.table().size());
    const std::size_t l = input.cardinality();
    Valuation v(n);
    for (std::size_t ctx = 0; ctx < input.context_count(); ++ctx) {
      input.decode_context(ctx, v);
      double z = 0.0;
      for (std::size_t i = 0; i < l; ++i) {
        v.set(k, static_cast<int>(i));
        table[ctx * l + i] = marginal.at(v);
        z += table[ctx * l + i];
      }
      for (std::size_t i = 0; i < l; ++i) {
        table[ctx * l + i] = z > 0.0 ? table[ctx * l + i] / z : input.row(ctx)[i];
      }
    }
    cpts.emplace_back(k, input.parents(), input.parent_cards(), l, std::move(table));
  }
  return BayesNet(base.dag_ptr(), std::move(cpts));
}

// Pr(x|pa) · Pr_F(x|pa)^Δ. The formula factor is rescaled by one constant
// for the whole table (a per-row constant would change the joint).
std::vector<double> tilt(const Cpt& input, const Cpt& formula, double delta) {
  std::vector<double> table = input.table();
  double top = -std::numeric_limits<double>::infinity();
  for (double r : formula.table()) top = std::max(top, delta * std::log(r));
  for (std::size_t i = 0; i < table.size(); ++i) {
    table[i] *= std::exp(delta * std::log(formula.table()[i]) - top);
  }
  return table;
}

double dense_formula_conditional(const JointTable& p, const CnfSecurity& f,
                                 const Valuation& evidence) {
  const double pe = oracle_probability(p, evidence);
  if (!(pe > 0.0)) throw MarketError(ErrorCode::kNullEvent, "conditioning on null event");
  const auto ind = oracle_indicator(f);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (ind[i] == 0.0 || p[i] == 0.0) continue;
    const Valuation v = p.outcome(i);
    bool match = true;
    for (std::size_t k = 0; k < v.size() && match; ++k) {
      match = !evidence.assigned(k) || evidence[k] == v[k];
    }
    if (match) s += p[i];
  }
  return s / pe;
}

Valuation merge_events(const Valuation& a, const Valuation& b) {
  Valuation out = a;
  for (std::size_t k : b.assigned_variables()) {
    if (out.assigned(k) && out[k] != b[k]) {
      throw MarketError(ErrorCode::kNullEvent, "events B and E are contradictory");
    }
    out.set(k, b[k]);
  }
  return out;
}

double post_trade_formula(double p_b_given_e, double p_a_given_be, double p_a_given_e,
                          double delta) {
  const double g = std::exp(delta);
  return p_b_given_e * (g * p_a_given_be + (1.0 - p_a_given_be)) /
         (g * p_a_given_e + (1.0 - p_a_given_e));
}

}  // namespace

UpdateMode resolve_mode(const Dag& dag, const CnfSecurity& f, ModeRequest request,
                        std::optional<std::string>* warning) {
  if (request == ModeRequest::kApprox) return UpdateMode::kApprox;
  bool compatible = false;
  try {
    compatible = is_compatible(f, dag).compatible;
  } catch (const MarketError& e) {
    if (e.code() != ErrorCode::kCompatCheckTooLarge) throw;
    if (request == ModeRequest::kExact) {
      throw MarketError(ErrorCode::kCompatCheckTooLarge, e.what());
    }
    if (warning) *warning = e.what();
    return UpdateMode::kApprox;
  }
  const bool exact = compatible && dag.is_decomposable();
  if (request == ModeRequest::kExact && !exact) {
    throw MarketError(ErrorCode::kNotStructurePreserving,
                      dag.is_decomposable()
                          ? "security " + f.source_text() + " is not structure preserving"
                          : "exact updates need a decomposable DAG");
  }
  return exact ? UpdateMode::kExact : UpdateMode::kApprox;
}

Cpt formula_cpt(const CnfSecurity& f, const Dag& g, std::size_t k) {
  Cpt shape = Cpt::uniform(g, k);
  std::vector<double> table(shape.table().size());
  const std::size_t l = shape.cardinality();
  Valuation given(g.size());
  for (std::size_t ctx = 0; ctx < shape.context_count(); ++ctx) {
    shape.decode_context(ctx, given);
    const auto row = formula_conditional(f, k, given);
    std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(ctx * l));
  }
  return Cpt(k, shape.parents(), shape.parent_cards(), l, std::move(table));
}

UpdatePlan plan_update(const Dag& dag, const CnfSecurity& f, UpdateMode mode) {
  UpdatePlan plan;
  plan.mode = mode;
  plan.pivotal = pivotal_variables(f);
  plan.touched = dag.ancestral_closure(plan.pivotal);
  for (std::size_t k : plan.pivotal) plan.formula_cpts.push_back(formula_cpt(f, dag, k));
  return plan;
}

BayesNet apply_plan(const BayesNet& pr, const UpdatePlan& plan, double delta) {
  if (delta == 0.0 || plan.pivotal.empty()) return pr;
  Potentials psi(pr.size());
  for (const Cpt& fc : plan.formula_cpts) {
    psi[fc.variable()] = tilt(pr.cpt(fc.variable()), fc, delta);
  }
  if (pr.dag().is_decomposable()) return renormalize_decomposable(pr, std::move(psi));
  if (plan.mode == UpdateMode::kExact) {
    throw MarketError(ErrorCode::kNotStructurePreserving,
                      "exact updates need a decomposable DAG");
  }
  return project_potentials(pr, psi, plan.touched);
}

BayesNet comp_price(const Dag& g, const BayesNet& pr, const CnfSecurity& f, double delta) {
  if (!(pr.dag().structure_hash() == g.structure_hash())) {
    throw MarketError(ErrorCode::kBadSpec, "network is not over the given DAG");
  }
  if (!g.is_decomposable()) {
    throw MarketError(ErrorCode::kNotStructurePreserving,
                      "exact updates need a decomposable DAG");
  }
  return apply_plan(pr, plan_update(g, f, UpdateMode::kExact), delta);
}

JointTable logop(const JointTable& p1, double w1, const JointTable& p2, double w2) {
  if (!(p1.schema() == p2.schema())) {
    throw MarketError(ErrorCode::kBadSpec, "pool inputs over different outcome spaces");
  }
  // Accumulate in log space; zeros stay zero unless their weight is 0.
  std::vector<double> logs(p1.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logs.size(); ++i) {
    double l = 0.0;
    for (auto [x, w] : {std::pair{p1[i], w1}, std::pair{p2[i], w2}}) {
      if (w == 0.0) continue;
      l += x == 0.0 ? -std::numeric_limits<double>::infinity() : w * std::log(x);
    }
    logs[i] = l;
    top = std::max(top, l);
  }
  if (top == -std::numeric_limits<double>::infinity()) {
    throw MarketError(ErrorCode::kNullEvent, "opinion pool is identically zero");
  }
  double z = 0.0;
  for (double& l : logs) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logs) l /= z;
  return JointTable(p1.schema_ptr(), JointTable::Kind::kProbability, std::move(logs));
}

BayesNet logop(const BayesNet& p1, double w1, const BayesNet& p2, double w2) {
  if (p1.dag().structure_hash() != p2.dag().structure_hash()) {
    throw MarketError(ErrorCode::kBadSpec, "pool inputs over different DAGs");
  }
  if (!p1.dag().is_decomposable()) {
    throw MarketError(ErrorCode::kNotStructurePreserving,
                      "network pooling needs a decomposable DAG");
  }
  Potentials psi(p1.size());
  for (std::size_t k = 0; k < p1.size(); ++k) {
    const auto& a = p1.cpt(k).table();
    const auto& b = p2.cpt(k).table();
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = pow0(a[i], w1) * pow0(b[i], w2);
    psi[k] = std::move(t);
  }
  BayesNet out = renormalize_decomposable(p1, std::move(psi));
  // A context whose pooled row is all zero cannot be renormalized; if that
  // happens at a root the whole pool vanished.
  for (std::size_t k = 0; k < p1.size(); ++k) {
    if (!p1.dag().parents(k).empty()) continue;
    double z = 0.0;
    for (std::size_t i = 0; i < p1.cpt(k).table().size(); ++i) {
      z += pow0(p1.cpt(k).table()[i], w1) * pow0(p2.cpt(k).table()[i], w2);
    }
    if (!(z > 0.0)) throw MarketError(ErrorCode::kNullEvent, "opinion pool is identically zero");
  }
  return out;
}

double post_trade_conditional(const BayesNet& pr, const CnfSecurity& a,
                              const Valuation& b_event, const Valuation& e_event, double delta) {
  const Valuation be = merge_events(b_event, e_event);
  const double p_e = evidence_probability(pr, e_event);
  const double p_be = evidence_probability(pr, be);
  if (!(p_be > 0.0) || !(p_e > 0.0)) {
    throw MarketError(ErrorCode::kNullEvent, "conditioning on null event");
  }
  return post_trade_formula(p_be / p_e, formula_probability(pr, a, be),
                        formula_probability(pr, a, e_event), delta);
}

double post_trade_conditional(const JointTable& pr, const CnfSecurity& a,
                              const Valuation& b_event, const Valuation& e_event, double delta) {
  const Valuation be = merge_events(b_event, e_event);
  const double p_e = oracle_probability(pr, e_event);
  const double p_be = oracle_probability(pr, be);
  if (!(p_be > 0.0) || !(p_e > 0.0)) {
    throw MarketError(ErrorCode::kNullEvent, "conditioning on null event");
  }
  return post_trade_formula(p_be / p_e, dense_formula_conditional(pr, a, be),
                        dense_formula_conditional(pr, a, e_event), delta);
}

BayesNet kl_projection(const CnfSecurity& f, DagPtr g) {
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < g->size(); ++k) cpts.push_back(formula_cpt(f, *g, k));
  return BayesNet(std::move(g), std::move(cpts));
}

double kl_divergence(const JointTable& p, const JointTable& q) {
  if (!(p.schema() == q.schema())) {
    throw MarketError(ErrorCode::kBadSpec, "divergence between different outcome spaces");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, s);
}

TradeResult apply_trade(const MarketState& ms, const CnfSecurity& f, double delta,
                        ModeRequest mode) {
  std::optional<std::string> warning;
  const UpdateMode resolved = resolve_mode(ms.net().dag(), f, mode, &warning);
  return apply_trade_resolved(ms, f, delta, resolved, std::move(warning));
}

TradeResult apply_trade_resolved(const MarketState& ms, const CnfSecurity& f, double delta,
                                 UpdateMode mode, std::optional<std::string> warning) {
  TradeResult result{ms, {}};
  TradeReceipt& r = result.receipt;
  r.security = f.source_text();
  r.delta = delta;
  r.mode = mode;
  r.warning = std::move(warning);
  r.pre_price = price_of(ms, f);
  r.revision = ms.revision;
  if (delta == 0.0) {
    r.post_price = r.pre_price;
    return result;
  }
  r.dollar_cost = cost_from_price(ms.liquidity, r.pre_price, delta);

  const UpdatePlan plan = plan_update(ms.net().dag(), f, r.mode);
  MarketState& next = result.state;
  next.distribution = std::make_shared<const BayesNet>(apply_plan(ms.net(), plan, delta));
  next.revision = ms.revision + 1;
  next.updated = MarketState::Clock::now();
  r.revision = next.revision;
  r.post_price = price_of(next, f);

  if (r.mode == UpdateMode::kApprox) {
    const auto n = ms.net().schema().outcome_count();
    if (n && *n <= kApproxKlMaxOutcomes) {
      r.approx_kl = kl_divergence(oracle_pr_f(f),
                                  densify(kl_projection(f, ms.net().dag_ptr())));
    }
  }
  return result;
}

}  // namespace bnmarket
