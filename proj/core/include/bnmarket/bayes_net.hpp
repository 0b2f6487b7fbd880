#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "bnmarket/dag.hpp"
#include "bnmarket/schema.hpp"

namespace bnmarket {

using DagPtr = std::shared_ptr<const Dag>;

inline constexpr double kRowSumTolerance = 1e-12;

/// Conditional probability table Pr(X | Pa(X)). Rows are indexed by the
/// mixed-radix encoding of the parent values in ascending parent-index order.
class Cpt {
 public:
  Cpt(std::size_t variable, VariableSet parents,
      std::vector<std::size_t> parent_cards, std::size_t cardinality,
      std::vector<double> table);

  static Cpt uniform(const Dag& dag, std::size_t k);

  std::size_t variable() const { return variable_; }
  const VariableSet& parents() const { return parents_; }
  const std::vector<std::size_t>& parent_cards() const { return parent_cards_; }
  std::size_t cardinality() const { return cardinality_; }
  std::size_t context_count() const { return table_.size() / cardinality_; }

  std::span<const double> row(std::size_t context) const {
    return {table_.data() + context * cardinality_, cardinality_};
  }
  const std::vector<double>& table() const { return table_; }

  // Parent values must be assigned in v.
  std::size_t context_index(const Valuation& v) const;
  // Writes the parent values of context into v.
  void decode_context(std::size_t context, Valuation& v) const;
  double probability(int value, const Valuation& v) const {
    return row(context_index(v))[static_cast<std::size_t>(value)];
  }

  // Row-wise check: nonnegative entries summing to 1 within tolerance.
  // Throws MarketError(kBadSpec) with the offending context.
  void validate(double tolerance = kRowSumTolerance) const;

  bool operator==(const Cpt&) const = default;

 private:
  std::size_t variable_;
  VariableSet parents_;
  std::vector<std::size_t> parent_cards_;
  std::size_t cardinality_;
  std::vector<double> table_;
};

/// DAG plus one CPT per variable. Immutable once built.
class BayesNet {
 public:
  BayesNet(DagPtr dag, std::vector<Cpt> cpts);

  static BayesNet uniform(DagPtr dag);

  const Dag& dag() const { return *dag_; }
  const DagPtr& dag_ptr() const { return dag_; }
  const Schema& schema() const { return dag_->schema(); }
  std::size_t size() const { return cpts_.size(); }
  const Cpt& cpt(std::size_t k) const { return cpts_.at(k); }
  const std::vector<Cpt>& cpts() const { return cpts_; }

  // Every CPT entry > 0.
  bool strictly_positive() const;

 private:
  DagPtr dag_;
  std::vector<Cpt> cpts_;
};

// Builds a CPT for variable k from explicit rows (one per parent context).
Cpt make_cpt(const Dag& dag, std::size_t k, std::vector<double> table);

}  // namespace bnmarket
