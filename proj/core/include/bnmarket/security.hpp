#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnmarket/dag.hpp"
#include "bnmarket/schema.hpp"

namespace bnmarket {

struct Literal {
  std::size_t variable;
  int value;
  bool negated = false;

  bool satisfied_by(int v) const { return (v == value) != negated; }
  bool operator==(const Literal&) const = default;
};

struct Clause {
  std::vector<Literal> literals;

  bool operator==(const Clause&) const = default;
};

/// A CNF formula over the market variables. Pays $1 per share when the
/// realized outcome satisfies every clause.
class CnfSecurity {
 public:
  CnfSecurity(SchemaPtr schema, std::vector<Clause> clauses, std::string source_text);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  // Variables mentioned by some literal, ascending.
  const VariableSet& variables() const { return variables_; }
  const std::string& source_text() const { return source_text_; }

  // Canonical rendering; parse_security(to_string()) yields an equal formula.
  std::string to_string() const;

  // Only the entries of variables() are read.
  bool evaluate(std::span<const int> values) const;

  bool operator==(const CnfSecurity& other) const { return clauses_ == other.clauses_; }

 private:
  SchemaPtr schema_;
  std::vector<Clause> clauses_;
  VariableSet variables_;
  std::string source_text_;
};

// Grammar:
//   security := clause ("&" clause)*
//   clause   := lit | "(" lit ("|" lit)* ")"
//   lit      := IDENT "=" LABEL | IDENT "!=" LABEL
// Throws ParseError carrying the byte offset of the problem.
CnfSecurity parse_security(std::string_view text, SchemaPtr schema);

// 1 iff every clause has a satisfied literal. v must assign vars(f).
int eval_formula(const CnfSecurity& f, const Valuation& v);

// Number of total valuations agreeing with `fixed` that satisfy f. Throws
// MarketError(kSizeLimit) if the count does not fit in 64 bits.
std::uint64_t count_models(const CnfSecurity& f, const Valuation& fixed);

// Variables whose value can change F for some setting of the others.
VariableSet pivotal_variables(const CnfSecurity& f);

// Pr_F(target | given) with Pr_F(v) proportional to e^{F(v)}, from model counts.
std::vector<double> formula_conditional(const CnfSecurity& f, std::size_t target,
                                        const Valuation& given);

/// Violation of formula/DAG compatibility for variable X_k: flipping X_k
/// between value1 and value2 under the blanket values changes F differently
/// in context `inside` than in context `outside`.
struct CompatWitness {
  std::size_t variable;
  int value1;
  int value2;
  Valuation blanket;  // values of Bl(X_k) ∩ vars(f)
  Valuation inside;   // u: context outside the blanket
  Valuation outside;  // w: second context outside the blanket
};

struct CompatReport {
  bool compatible = true;
  std::optional<CompatWitness> witness;
};

inline constexpr std::size_t kMaxCompatVariables = 24;

// Exact check, exponential in |vars(f)|. Throws
// MarketError(kCompatCheckTooLarge) past kMaxCompatVariables.
CompatReport is_compatible(const CnfSecurity& f, const Dag& dag);

// Replays a witness through eval_formula; true if it exhibits a violation.
bool verify_witness(const CnfSecurity& f, const CompatWitness& witness);

std::string describe_witness(const CnfSecurity& f, const CompatWitness& witness);

// vars(f) pairwise adjacent. Requires a decomposable DAG.
bool clique_scoped(const CnfSecurity& f, const Dag& dag);

}  // namespace bnmarket
