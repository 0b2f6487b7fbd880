#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/dag.hpp"
#include "bnmarket/schema.hpp"
#include "bnmarket/security.hpp"

namespace bnmarket {

/// Dense table over the full outcome space Ω = Ω_1 × … × Ω_n. Outcome index is
/// the mixed-radix encoding in variable-index order, least significant last.
/// Brute-force ground truth for everything the engine computes.
class JointTable {
 public:
  enum class Kind { kProbability, kQuantity };

  static constexpr std::size_t kMaxOutcomes = std::size_t{1} << 20;
  static constexpr double kNormTolerance = 1e-12;

  // Probability tables must be nonnegative and sum to 1 within kNormTolerance.
  JointTable(SchemaPtr schema, Kind kind, std::vector<double> values);

  static JointTable filled(SchemaPtr schema, Kind kind, double value);
  // Throws MarketError(kSizeLimit) when the schema has too many outcomes.
  static std::size_t checked_size(const Schema& schema);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  Kind kind() const { return kind_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::size_t index_of(const Valuation& total) const;
  Valuation outcome(std::size_t index) const;

 private:
  SchemaPtr schema_;
  Kind kind_;
  std::vector<double> values_;
};

JointTable densify(const BayesNet& bn);

// C(q) = b log Σ exp(q(i)/b), evaluated with a max shift.
double oracle_cost(const JointTable& quantities, double b);
// I_q(i) = exp(q(i)/b) / Σ_j exp(q(j)/b).
JointTable oracle_prices(const JointTable& quantities, double b);
// q(i) = b log p(i); zero-probability outcomes get -infinity.
JointTable quantities_from_prices(const JointTable& prices, double b);

struct OracleTrade {
  JointTable quantities;
  double cost;
};
// t = q + Δb·1_F; cost = C(t) - C(q).
OracleTrade oracle_trade(const JointTable& quantities, const CnfSecurity& f,
                         double delta, double b);

// Pointwise p1^w1 · p2^w2, normalized.
JointTable oracle_logop(const JointTable& p1, double w1, const JointTable& p2, double w2);
// Pr_F(v) ∝ e^{F(v)}.
JointTable oracle_pr_f(const CnfSecurity& f);
// 1_F as a 0/1 vector.
std::vector<double> oracle_indicator(const CnfSecurity& f);

// Every variable is independent of the rest given its Markov blanket in g,
// checked on every blanket context to `tolerance`.
bool oracle_local_markov(const JointTable& p, const Dag& g, double tolerance = 1e-12);

double oracle_event_probability(const JointTable& p, const CnfSecurity& f);
double oracle_probability(const JointTable& p, const Valuation& event);
std::vector<double> oracle_conditional(const JointTable& p, std::size_t target,
                                       const Valuation& evidence);
// Refits the CPTs of g from a dense table (rows of zero-probability contexts
// become uniform).
BayesNet oracle_fit(const JointTable& p, DagPtr g);

double max_abs_difference(const JointTable& a, const JointTable& b);
double total_variation(const JointTable& a, const JointTable& b);

// Golden-file rendering: [[index, probability], ...] with 17 significant digits.
std::string to_golden(const JointTable& p);
JointTable from_golden(SchemaPtr schema, const std::string& text);

}  // namespace bnmarket
