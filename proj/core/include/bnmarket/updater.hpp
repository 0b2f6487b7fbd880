#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/lmsr.hpp"
#include "bnmarket/oracle.hpp"
#include "bnmarket/security.hpp"

namespace bnmarket {

/// What a trade on a security will rewrite. In exact mode formula_cpts are the
/// CPTs of Pr_F; in approx mode those of its projection Pr_F^*. Both are
/// Pr_F(X_k | Pa(X_k)) and only differ in whether they represent Pr_F exactly.
struct UpdatePlan {
  UpdateMode mode = UpdateMode::kExact;
  VariableSet pivotal;
  VariableSet touched;  // pivotal plus all of their ancestors
  std::vector<Cpt> formula_cpts;  // one per pivotal variable, same order
};

// Decides the mode for a request. Exact needs a decomposable DAG and a
// compatible security; a request for exact that cannot be honored throws
// MarketError(kNotStructurePreserving). `warning` receives a note when the
// compatibility check was too large and approx was chosen instead.
UpdateMode resolve_mode(const Dag& dag, const CnfSecurity& f, ModeRequest request,
                        std::optional<std::string>* warning = nullptr);

UpdatePlan plan_update(const Dag& dag, const CnfSecurity& f, UpdateMode mode);

// Pr_F(X_k | Pa_G(X_k)) for every parent context.
Cpt formula_cpt(const CnfSecurity& f, const Dag& g, std::size_t k);

// Normalized p1^w1 · p2^w2 (zero entries stay zero for nonzero weight).
JointTable logop(const JointTable& p1, double w1, const JointTable& p2, double w2);
// Same pool for two networks over one decomposable DAG; result is over it too.
BayesNet logop(const BayesNet& p1, double w1, const BayesNet& p2, double w2);

// LogOP(pr, Δ·Pr_F) as a network over g. g must be decomposable and f
// compatible with it (the caller checks compatibility).
BayesNet comp_price(const Dag& g, const BayesNet& pr, const CnfSecurity& f, double delta);

// Applies a plan: multiplies each pivotal family by its formula CPT raised to
// Δ and renormalizes onto the market DAG.
BayesNet apply_plan(const BayesNet& pr, const UpdatePlan& plan, double delta);

// Post-trade Pr̄(B | E) after Δb shares of A, from pre-trade quantities.
double post_trade_conditional(const BayesNet& pr, const CnfSecurity& a,
                              const Valuation& b_event, const Valuation& e_event, double delta);
double post_trade_conditional(const JointTable& pr, const CnfSecurity& a,
                              const Valuation& b_event, const Valuation& e_event, double delta);

// G-compatible network whose CPT rows are Pr_F(X_k | Pa_G(X_k)).
BayesNet kl_projection(const CnfSecurity& f, DagPtr g);

// Σ p log(p/q). Returns +infinity when p puts mass where q has none.
double kl_divergence(const JointTable& p, const JointTable& q);

struct TradeReceipt {
  std::string security;
  double delta = 0.0;
  double dollar_cost = 0.0;
  UpdateMode mode = UpdateMode::kExact;
  double pre_price = 0.0;
  double post_price = 0.0;
  std::uint64_t revision = 0;
  std::optional<double> approx_kl;
  std::optional<std::string> warning;
};

struct TradeResult {
  MarketState state;
  TradeReceipt receipt;
};

// Outcome spaces up to this size get the dense KL diagnostic in approx mode.
inline constexpr std::size_t kApproxKlMaxOutcomes = std::size_t{1} << 16;

TradeResult apply_trade(const MarketState& ms, const CnfSecurity& f, double delta,
                        ModeRequest mode = ModeRequest::kAuto);
// Skips mode resolution; exact mode still requires a decomposable DAG. Used by
// replay, which must reproduce the logged mode.
TradeResult apply_trade_resolved(const MarketState& ms, const CnfSecurity& f, double delta,
                                 UpdateMode mode,
                                 std::optional<std::string> warning = std::nullopt);

}  // namespace bnmarket
