#pragma once

#include <cstddef>
#include <vector>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/schema.hpp"

namespace bnmarket {

/// Nonnegative table over a sorted set of variables; first variable is the
/// most significant digit of the flat index.
class Factor {
 public:
  Factor() : values_{1.0} {}
  Factor(VariableSet vars, std::vector<std::size_t> cards, std::vector<double> values);

  static Factor from_cpt(const Cpt& cpt);

  const VariableSet& vars() const { return vars_; }
  const std::vector<std::size_t>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  std::size_t size() const { return values_.size(); }

  // Value at the assignment given by v (all factor variables assigned).
  double at(const Valuation& v) const;

  // Restricts to the slice consistent with evidence; assigned vars are dropped.
  Factor reduce(const Valuation& evidence) const;
  Factor sum_out(std::size_t var) const;
  double total() const;

  friend Factor multiply(const Factor& a, const Factor& b);

 private:
  VariableSet vars_;
  std::vector<std::size_t> cards_;
  std::vector<double> values_;
};

Factor multiply(const Factor& a, const Factor& b);

// Sums every variable not in keep out of the product of factors, choosing a
// greedy min-weight elimination order. The result is over exactly `keep`
// (variables of keep absent from every factor are not added).
Factor eliminate_all_but(std::vector<Factor> factors, const VariableSet& keep);

}  // namespace bnmarket
