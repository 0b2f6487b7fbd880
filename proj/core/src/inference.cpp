#include "bnmarket/inference.hpp"

#include <algorithm>
#include <cmath>

#include "bnmarket/error.hpp"

namespace bnmarket {

namespace {

constexpr std::size_t kLinearFactorLimit = 16;

void require_evidence_shape(const BayesNet& bn, const Valuation& evidence) {
  validate_valuation(bn.schema(), evidence);
}

std::vector<double> normalize_row(std::vector<double> row) {
  double z = 0.0;
  for (double p : row) z += p;
  if (!(z > 0.0)) {
    throw MarketError(ErrorCode::kNullEvent, "conditioning on null event");
  }
  for (double& p : row) p /= z;
  return row;
}

// CPT factors of the ancestral sub-network of `anchor`, reduced by evidence.
std::vector<Factor> ancestral_factors(const BayesNet& bn, const VariableSet& anchor,
                                      const Valuation& evidence) {
  std::vector<Factor> factors;
  for (std::size_t k : bn.dag().ancestral_closure(anchor)) {
    factors.push_back(Factor::from_cpt(bn.cpt(k)).reduce(evidence));
  }
  return factors;
}

VariableSet with_evidence(VariableSet vars, const Valuation& evidence) {
  for (std::size_t k : evidence.assigned_variables()) vars.push_back(k);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

std::vector<double> enumerate_query(const BayesNet& bn, std::size_t target,
                                    const Valuation& evidence) {
  const auto relevant = bn.dag().ancestral_closure(with_evidence({target}, evidence));
  VariableSet free_vars;
  std::vector<std::size_t> radices;
  for (std::size_t k : relevant) {
    if (k != target && !evidence.assigned(k)) {
      free_vars.push_back(k);
      radices.push_back(bn.schema().domain_size(k));
    }
  }
  const std::size_t l = bn.schema().domain_size(target);
  std::vector<double> row(l, 0.0);
  Valuation v = evidence;
  std::vector<int> digits(free_vars.size(), 0);
  for (std::size_t i = 0; i < l; ++i) {
    v.set(target, static_cast<int>(i));
    std::fill(digits.begin(), digits.end(), 0);
    do {
      for (std::size_t j = 0; j < free_vars.size(); ++j) v.set(free_vars[j], digits[j]);
      double p = 1.0;
      for (std::size_t k : relevant) {
        p *= bn.cpt(k).probability(v[k], v);
        if (p == 0.0) break;
      }
      row[i] += p;
    } while (next_combination(radices, digits));
  }
  return normalize_row(std::move(row));
}

std::vector<double> eliminate_query(const BayesNet& bn, std::size_t target,
                                    const Valuation& evidence) {
  auto factors = ancestral_factors(bn, with_evidence({target}, evidence), evidence);
  Factor f = eliminate_all_but(std::move(factors), {target});
  return normalize_row(f.values());
}

}  // namespace

double joint_probability(const BayesNet& bn, const Valuation& v) {
  if (!v.is_total() || v.size() != bn.size()) {
    throw MarketError(ErrorCode::kBadSpec, "joint probability needs a total valuation");
  }
  if (bn.size() <= kLinearFactorLimit) {
    double p = 1.0;
    for (std::size_t k = 0; k < bn.size(); ++k) p *= bn.cpt(k).probability(v[k], v);
    return p;
  }
  double log_p = 0.0;
  for (std::size_t k = 0; k < bn.size(); ++k) {
    const double p = bn.cpt(k).probability(v[k], v);
    if (p == 0.0) return 0.0;
    log_p += std::log(p);
  }
  return std::exp(log_p);
}

double evidence_probability(const BayesNet& bn, const Valuation& evidence) {
  require_evidence_shape(bn, evidence);
  const auto anchor = evidence.assigned_variables();
  if (anchor.empty()) return 1.0;
  return eliminate_all_but(ancestral_factors(bn, anchor, evidence), {}).total();
}

bool blanket_covered(const BayesNet& bn, std::size_t target, const Valuation& evidence) {
  for (std::size_t k : bn.dag().markov_blanket(target)) {
    if (!evidence.assigned(k)) return false;
  }
  return true;
}

std::vector<double> blanket_conditional(const BayesNet& bn, std::size_t target,
                                        const Valuation& evidence) {
  if (!blanket_covered(bn, target, evidence)) {
    throw MarketError(ErrorCode::kBadSpec,
                      "blanket fast path needs the Markov blanket of " +
                          bn.schema().name(target) + " in the evidence");
  }
  const std::size_t l = bn.schema().domain_size(target);
  std::vector<double> row(l);
  Valuation v = evidence;
  for (std::size_t i = 0; i < l; ++i) {
    v.set(target, static_cast<int>(i));
    double p = bn.cpt(target).probability(static_cast<int>(i), v);
    for (std::size_t c : bn.dag().children(target)) {
      p *= bn.cpt(c).probability(v[c], v);
    }
    row[i] = p;
  }
  return normalize_row(std::move(row));
}

std::vector<double> conditional_query(const BayesNet& bn, std::size_t target,
                                      const Valuation& evidence,
                                      InferenceStrategy strategy) {
  require_evidence_shape(bn, evidence);
  if (target >= bn.size()) {
    throw MarketError(ErrorCode::kUnknownVariable, "query target out of range");
  }
  if (evidence.assigned(target)) {
    throw MarketError(ErrorCode::kBadSpec,
                      "query target " + bn.schema().name(target) + " is in the evidence");
  }
  switch (strategy) {
    case InferenceStrategy::kEnumerate:
      return enumerate_query(bn, target, evidence);
    case InferenceStrategy::kEliminate:
      return eliminate_query(bn, target, evidence);
    case InferenceStrategy::kBlanket:
      return blanket_conditional(bn, target, evidence);
    case InferenceStrategy::kAuto:
      break;
  }
  // With zero CPT entries the closed form cannot see a null event outside the
  // blanket, so it is only taken on strictly positive networks.
  if (blanket_covered(bn, target, evidence) && bn.strictly_positive()) {
    return blanket_conditional(bn, target, evidence);
  }
  return eliminate_query(bn, target, evidence);
}

Factor joint_marginal(const BayesNet& bn, const VariableSet& query,
                      const Valuation& evidence) {
  require_evidence_shape(bn, evidence);
  VariableSet free_query;
  for (std::size_t k : query) {
    if (!evidence.assigned(k)) free_query.push_back(k);
  }
  std::sort(free_query.begin(), free_query.end());
  free_query.erase(std::unique(free_query.begin(), free_query.end()), free_query.end());

  auto factors = ancestral_factors(bn, with_evidence(free_query, evidence), evidence);
  Factor f = eliminate_all_but(std::move(factors), free_query);
  const double z = f.total();
  if (!(z > 0.0)) throw MarketError(ErrorCode::kNullEvent, "conditioning on null event");
  for (double& p : f.mutable_values()) p /= z;
  return f;
}

}  // namespace bnmarket
