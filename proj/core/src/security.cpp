#include "bnmarket/security.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "bnmarket/error.hpp"
#include "enumerate.hpp"

namespace bnmarket {

CnfSecurity::CnfSecurity(SchemaPtr schema, std::vector<Clause> clauses,
                         std::string source_text)
    : schema_(std::move(schema)),
      clauses_(std::move(clauses)),
      source_text_(std::move(source_text)) {
  if (clauses_.empty()) throw MarketError(ErrorCode::kBadSpec, "security has no clauses");
  for (const auto& clause : clauses_) {
    if (clause.literals.empty()) throw MarketError(ErrorCode::kBadSpec, "empty clause");
    for (const auto& lit : clause.literals) {
      if (lit.variable >= schema_->size() || lit.value < 0 ||
          static_cast<std::size_t>(lit.value) >= schema_->domain_size(lit.variable)) {
        throw MarketError(ErrorCode::kBadSpec, "literal outside the market's variables");
      }
      variables_.push_back(lit.variable);
    }
  }
  std::sort(variables_.begin(), variables_.end());
  variables_.erase(std::unique(variables_.begin(), variables_.end()), variables_.end());
  if (source_text_.empty()) source_text_ = to_string();
}

std::string CnfSecurity::to_string() const {
  std::string out;
  for (std::size_t c = 0; c < clauses_.size(); ++c) {
    if (c) out += " & ";
    const auto& lits = clauses_[c].literals;
    if (lits.size() > 1) out += '(';
    for (std::size_t i = 0; i < lits.size(); ++i) {
      if (i) out += " | ";
      out += schema_->name(lits[i].variable);
      out += lits[i].negated ? "!=" : "=";
      out += schema_->label(lits[i].variable, lits[i].value);
    }
    if (lits.size() > 1) out += ')';
  }
  return out;
}

bool CnfSecurity::evaluate(std::span<const int> values) const {
  for (const auto& clause : clauses_) {
    bool sat = false;
    for (const auto& lit : clause.literals) {
      if (lit.satisfied_by(values[lit.variable])) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Schema& schema) : text_(text), schema_(schema) {}

  std::vector<Clause> parse() {
    std::vector<Clause> clauses;
    clauses.push_back(clause());
    while (true) {
      skip_ws();
      if (pos_ == text_.size()) break;
      expect('&', "expected '&' between clauses");
      clauses.push_back(clause());
    }
    return clauses;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at,
                         ErrorCode code = ErrorCode::kBadSpec) const {
    throw ParseError(code, at, what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c, const std::string& what) {
    if (!peek(c)) fail(what, pos_);
    ++pos_;
  }

  std::string_view identifier(const char* what) {
    skip_ws();
    const std::size_t start = pos_;
    auto head = [](char ch) {
      return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_';
    };
    if (pos_ >= text_.size() || !head(text_[pos_])) fail(std::string("expected ") + what, pos_);
    ++pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  Literal literal() {
    skip_ws();
    const std::size_t var_at = pos_;
    const auto name = identifier("variable name");
    const auto k = schema_.find(name);
    if (!k) fail("unknown variable " + std::string(name), var_at, ErrorCode::kUnknownVariable);
    skip_ws();
    bool negated = false;
    if (pos_ + 1 < text_.size() && text_[pos_] == '!' && text_[pos_ + 1] == '=') {
      negated = true;
      pos_ += 2;
    } else if (pos_ < text_.size() && text_[pos_] == '=') {
      ++pos_;
    } else {
      fail("expected '=' or '!='", pos_);
    }
    skip_ws();
    const std::size_t label_at = pos_;
    const auto label = identifier("value label");
    const auto value = schema_.find_value(*k, label);
    if (!value) {
      fail("value " + std::string(label) + " is not in the domain of " + std::string(name),
           label_at);
    }
    return Literal{*k, *value, negated};
  }

  Clause clause() {
    Clause c;
    if (peek('(')) {
      ++pos_;
      if (peek(')')) fail("empty clause", pos_);
      c.literals.push_back(literal());
      while (peek('|')) {
        ++pos_;
        c.literals.push_back(literal());
      }
      expect(')', "expected '|' or ')'");
    } else {
      c.literals.push_back(literal());
    }
    return c;
  }

  std::string_view text_;
  const Schema& schema_;
  std::size_t pos_ = 0;
};

}  // namespace

CnfSecurity parse_security(std::string_view text, SchemaPtr schema) {
  Parser parser(text, *schema);
  auto clauses = parser.parse();
  return CnfSecurity(std::move(schema), std::move(clauses), std::string(text));
}

int eval_formula(const CnfSecurity& f, const Valuation& v) {
  for (std::size_t k : f.variables()) {
    if (k >= v.size() || !v.assigned(k)) {
      throw MarketError(ErrorCode::kBadSpec, "valuation leaves " + f.schema().name(k) +
                                                 " unassigned");
    }
  }
  return f.evaluate(v.values()) ? 1 : 0;
}

std::uint64_t count_models(const CnfSecurity& f, const Valuation& fixed) {
  const Schema& schema = f.schema();
  validate_valuation(schema, fixed);
  VariableSet core;
  std::uint64_t free_factor = 1;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (fixed.assigned(k)) continue;
    if (contains(f.variables(), k)) {
      core.push_back(k);
    } else if (__builtin_mul_overflow(free_factor, schema.domain_size(k), &free_factor)) {
      throw MarketError(ErrorCode::kSizeLimit, "model count exceeds 64 bits");
    }
  }
  std::uint64_t satisfying = 0;
  Valuation v = fixed;
  detail::for_each_assignment(schema, core, v, [&](const Valuation& cur) {
    if (f.evaluate(cur.values())) ++satisfying;
    return true;
  });
  std::uint64_t total = 0;
  if (__builtin_mul_overflow(satisfying, free_factor, &total)) {
    throw MarketError(ErrorCode::kSizeLimit, "model count exceeds 64 bits");
  }
  return total;
}

namespace {

void guard_enumeration(const CnfSecurity& f) {
  if (f.variables().size() > kMaxCompatVariables) {
    throw MarketError(ErrorCode::kCompatCheckTooLarge,
                      "compatibility check too large: security uses " +
                          std::to_string(f.variables().size()) + " variables");
  }
  auto n = detail::space_size(f.schema(), f.variables());
  if (!n || *n > (std::uint64_t{1} << 32)) {
    throw MarketError(ErrorCode::kCompatCheckTooLarge,
                      "compatibility check too large: assignment space over 2^32");
  }
}

}  // namespace

VariableSet pivotal_variables(const CnfSecurity& f) {
  guard_enumeration(f);
  const Schema& schema = f.schema();
  VariableSet out;
  for (std::size_t x : f.variables()) {
    VariableSet others;
    for (std::size_t k : f.variables()) {
      if (k != x) others.push_back(k);
    }
    Valuation v(schema.size());
    for (std::size_t k = 0; k < schema.size(); ++k) v.set(k, 0);
    const bool exhausted = detail::for_each_assignment(schema, others, v, [&](const Valuation&) {
      v.set(x, 0);
      const bool first = f.evaluate(v.values());
      for (std::size_t i = 1; i < schema.domain_size(x); ++i) {
        v.set(x, static_cast<int>(i));
        if (f.evaluate(v.values()) != first) return false;
      }
      return true;
    });
    if (!exhausted) out.push_back(x);
  }
  return out;
}

std::vector<double> formula_conditional(const CnfSecurity& f, std::size_t target,
                                        const Valuation& given) {
  const Schema& schema = f.schema();
  validate_valuation(schema, given);
  if (target >= schema.size()) {
    throw MarketError(ErrorCode::kUnknownVariable, "target out of range");
  }
  if (given.assigned(target)) {
    throw MarketError(ErrorCode::kBadSpec, "target is part of the conditioning set");
  }
  guard_enumeration(f);
  // Counts over W = (vars(f) ∪ {target}) \ Y. Variables outside W multiply
  // both numerator and denominator by the same domain-size product.
  VariableSet scope;
  for (std::size_t k : f.variables()) {
    if (k != target && !given.assigned(k)) scope.push_back(k);
  }
  const std::size_t l = schema.domain_size(target);
  std::vector<double> sat_with(l, 0.0);
  double space_without_target = 1.0;
  for (std::size_t k : scope) space_without_target *= static_cast<double>(schema.domain_size(k));

  Valuation v = given;
  for (std::size_t i = 0; i < l; ++i) {
    v.set(target, static_cast<int>(i));
    std::uint64_t count = 0;
    detail::for_each_assignment(schema, scope, v, [&](const Valuation& cur) {
      if (f.evaluate(cur.values())) ++count;
      return true;
    });
    sat_with[i] = static_cast<double>(count);
  }
  double sat_total = 0.0;
  for (double c : sat_with) sat_total += c;

  const double e_minus_1 = std::expm1(1.0);
  const double denominator = e_minus_1 * sat_total + space_without_target * static_cast<double>(l);
  std::vector<double> row(l);
  for (std::size_t i = 0; i < l; ++i) {
    row[i] = (e_minus_1 * sat_with[i] + space_without_target) / denominator;
  }
  return row;
}

}  // namespace bnmarket
