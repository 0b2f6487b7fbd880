#pragma once

#include <cstddef>
#include <vector>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/factor.hpp"
#include "bnmarket/schema.hpp"

namespace bnmarket {

enum class InferenceStrategy {
  kAuto,       // blanket fast path when it applies, otherwise elimination
  kEnumerate,  // brute-force sum over the free ancestral variables
  kEliminate,  // variable elimination over the ancestral sub-network
  kBlanket,    // closed form; requires the evidence to cover the blanket
};

// Product of CPT entries. Accumulated in log space beyond 16 factors.
double joint_probability(const BayesNet& bn, const Valuation& v);

// Pr(evidence) for a partial valuation.
double evidence_probability(const BayesNet& bn, const Valuation& evidence);

// Exact Pr(target | evidence) as a row over the target's domain.
// Throws MarketError(kNullEvent) when Pr(evidence) = 0.
std::vector<double> conditional_query(const BayesNet& bn, std::size_t target,
                                      const Valuation& evidence,
                                      InferenceStrategy strategy = InferenceStrategy::kAuto);

// True when every Markov-blanket variable of target is assigned in evidence.
bool blanket_covered(const BayesNet& bn, std::size_t target, const Valuation& evidence);

// Normalized Pr(X=i | pa) * prod over children Y of Pr(y | pa(Y)).
std::vector<double> blanket_conditional(const BayesNet& bn, std::size_t target,
                                        const Valuation& evidence);

// Normalized joint Pr(query | evidence) as a factor over `query` (variables
// already fixed by evidence are dropped from the result).
// Throws MarketError(kNullEvent) when Pr(evidence) = 0.
Factor joint_marginal(const BayesNet& bn, const VariableSet& query,
                      const Valuation& evidence);

}  // namespace bnmarket
