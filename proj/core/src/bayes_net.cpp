#include "bnmarket/bayes_net.hpp"

#include <cmath>

#include "bnmarket/error.hpp"

namespace bnmarket {

Cpt::Cpt(std::size_t variable, VariableSet parents,
         std::vector<std::size_t> parent_cards, std::size_t cardinality,
         std::vector<double> table)
    : variable_(variable),
      parents_(std::move(parents)),
      parent_cards_(std::move(parent_cards)),
      cardinality_(cardinality),
      table_(std::move(table)) {
  if (parents_.size() != parent_cards_.size() || cardinality_ < 2) {
    throw MarketError(ErrorCode::kBadSpec, "malformed CPT shape");
  }
  std::size_t contexts = 1;
  for (std::size_t c : parent_cards_) contexts *= c;
  if (table_.size() != contexts * cardinality_) {
    throw MarketError(ErrorCode::kBadSpec, "CPT has " +
                                               std::to_string(table_.size()) +
                                               " entries, expected " +
                                               std::to_string(contexts * cardinality_));
  }
}

Cpt Cpt::uniform(const Dag& dag, std::size_t k) {
  const auto& schema = dag.schema();
  std::vector<std::size_t> cards;
  std::size_t contexts = 1;
  for (std::size_t p : dag.parents(k)) {
    cards.push_back(schema.domain_size(p));
    contexts *= schema.domain_size(p);
  }
  const std::size_t l = schema.domain_size(k);
  return Cpt(k, dag.parents(k), std::move(cards), l,
             std::vector<double>(contexts * l, 1.0 / static_cast<double>(l)));
}

std::size_t Cpt::context_index(const Valuation& v) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < parents_.size(); ++i) {
    index = index * parent_cards_[i] + static_cast<std::size_t>(v[parents_[i]]);
  }
  return index;
}

void Cpt::decode_context(std::size_t context, Valuation& v) const {
  for (std::size_t i = parents_.size(); i-- > 0;) {
    v.set(parents_[i], static_cast<int>(context % parent_cards_[i]));
    context /= parent_cards_[i];
  }
}

void Cpt::validate(double tolerance) const {
  for (std::size_t ctx = 0; ctx < context_count(); ++ctx) {
    double sum = 0.0;
    for (double p : row(ctx)) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw MarketError(ErrorCode::kBadSpec,
                          "CPT of variable " + std::to_string(variable_) +
                              " has a negative or non-finite entry in context " +
                              std::to_string(ctx));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw MarketError(ErrorCode::kBadSpec,
                        "CPT row of variable " + std::to_string(variable_) +
                            " context " + std::to_string(ctx) + " sums to " +
                            std::to_string(sum));
    }
  }
}

BayesNet::BayesNet(DagPtr dag, std::vector<Cpt> cpts)
    : dag_(std::move(dag)), cpts_(std::move(cpts)) {
  if (!dag_) throw MarketError(ErrorCode::kBadSpec, "network without a DAG");
  if (cpts_.size() != dag_->size()) {
    throw MarketError(ErrorCode::kBadSpec, "need exactly one CPT per variable");
  }
  const auto& schema = dag_->schema();
  for (std::size_t k = 0; k < cpts_.size(); ++k) {
    const Cpt& cpt = cpts_[k];
    if (cpt.variable() != k || cpt.parents() != dag_->parents(k) ||
        cpt.cardinality() != schema.domain_size(k)) {
      throw MarketError(ErrorCode::kBadSpec,
                        "CPT for " + schema.name(k) + " does not match the DAG");
    }
    for (std::size_t i = 0; i < cpt.parents().size(); ++i) {
      if (cpt.parent_cards()[i] != schema.domain_size(cpt.parents()[i])) {
        throw MarketError(ErrorCode::kBadSpec,
                          "CPT for " + schema.name(k) + " has wrong parent arity");
      }
    }
    cpt.validate();
  }
}

BayesNet BayesNet::uniform(DagPtr dag) {
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < dag->size(); ++k) cpts.push_back(Cpt::uniform(*dag, k));
  return BayesNet(std::move(dag), std::move(cpts));
}

bool BayesNet::strictly_positive() const {
  for (const auto& cpt : cpts_) {
    for (double p : cpt.table()) {
      if (!(p > 0.0)) return false;
    }
  }
  return true;
}

Cpt make_cpt(const Dag& dag, std::size_t k, std::vector<double> table) {
  std::vector<std::size_t> cards;
  for (std::size_t p : dag.parents(k)) cards.push_back(dag.schema().domain_size(p));
  return Cpt(k, dag.parents(k), std::move(cards), dag.schema().domain_size(k),
             std::move(table));
}

}  // namespace bnmarket
