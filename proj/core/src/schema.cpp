#include "bnmarket/schema.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "bnmarket/error.hpp"

namespace bnmarket {

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(s.front())) return false;
  return std::all_of(s.begin() + 1, s.end(), tail);
}

}  // namespace

Schema::Schema(std::vector<VariableSpec> variables)
    : variables_(std::move(variables)) {
  for (std::size_t k = 0; k < variables_.size(); ++k) {
    const auto& var = variables_[k];
    if (!is_identifier(var.name)) {
      throw MarketError(ErrorCode::kBadSpec,
                        "variable name '" + var.name + "' is not an identifier");
    }
    if (var.domain.size() < 2) {
      throw MarketError(ErrorCode::kBadSpec,
                        "variable " + var.name + " needs at least two values");
    }
    std::set<std::string_view> seen;
    for (const auto& label : var.domain) {
      if (!is_identifier(label)) {
        throw MarketError(ErrorCode::kBadSpec, "label '" + label + "' of " +
                                                   var.name +
                                                   " is not an identifier");
      }
      if (!seen.insert(label).second) {
        throw MarketError(ErrorCode::kBadSpec,
                          "duplicate label " + label + " in " + var.name);
      }
    }
    if (!by_name_.emplace(var.name, k).second) {
      throw MarketError(ErrorCode::kBadSpec, "duplicate variable " + var.name);
    }
  }
}

const std::string& Schema::label(std::size_t k, int value) const {
  return variables_.at(k).domain.at(static_cast<std::size_t>(value));
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::index_of(std::string_view name) const {
  auto k = find(name);
  if (!k) {
    throw MarketError(ErrorCode::kUnknownVariable,
                      "unknown variable " + std::string(name));
  }
  return *k;
}

std::optional<int> Schema::find_value(std::size_t k, std::string_view label) const {
  const auto& dom = variables_.at(k).domain;
  auto it = std::find(dom.begin(), dom.end(), label);
  if (it == dom.end()) return std::nullopt;
  return static_cast<int>(it - dom.begin());
}

int Schema::value_of(std::size_t k, std::string_view label) const {
  auto v = find_value(k, label);
  if (!v) {
    throw MarketError(ErrorCode::kBadSpec, "value " + std::string(label) +
                                               " is not in the domain of " +
                                               variables_.at(k).name);
  }
  return *v;
}

std::optional<std::uint64_t> Schema::outcome_count() const {
  std::uint64_t n = 1;
  for (const auto& var : variables_) {
    if (__builtin_mul_overflow(n, var.domain.size(), &n)) return std::nullopt;
  }
  return n;
}

bool Valuation::is_total() const {
  return std::none_of(values_.begin(), values_.end(),
                      [](int v) { return v == kUnassigned; });
}

std::vector<std::size_t> Valuation::assigned_variables() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (values_[k] != kUnassigned) out.push_back(k);
  }
  return out;
}

Valuation make_valuation(
    const Schema& schema,
    const std::vector<std::pair<std::string, std::string>>& assignments) {
  Valuation v(schema.size());
  for (const auto& [name, label] : assignments) {
    std::size_t k = schema.index_of(name);
    if (v.assigned(k)) {
      throw MarketError(ErrorCode::kBadSpec, "variable " + name + " assigned twice");
    }
    v.set(k, schema.value_of(k, label));
  }
  return v;
}

void validate_valuation(const Schema& schema, const Valuation& v) {
  if (v.size() != schema.size()) {
    throw MarketError(ErrorCode::kBadSpec, "valuation has wrong arity");
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v.assigned(k)) continue;
    if (v[k] < 0 || static_cast<std::size_t>(v[k]) >= schema.domain_size(k)) {
      throw MarketError(ErrorCode::kBadSpec,
                        "value out of domain for " + schema.name(k));
    }
  }
}

std::string to_string(const Schema& schema, const Valuation& v) {
  std::ostringstream os;
  os << '[';
  bool first = true;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v.assigned(k)) continue;
    if (!first) os << ", ";
    first = false;
    os << schema.name(k) << '=' << schema.label(k, v[k]);
  }
  os << ']';
  return os.str();
}

std::size_t encode_mixed_radix(std::span<const std::size_t> radices,
                               std::span<const int> digits) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < radices.size(); ++i) {
    index = index * radices[i] + static_cast<std::size_t>(digits[i]);
  }
  return index;
}

void decode_mixed_radix(std::span<const std::size_t> radices, std::size_t index,
                        std::span<int> digits) {
  for (std::size_t i = radices.size(); i-- > 0;) {
    digits[i] = static_cast<int>(index % radices[i]);
    index /= radices[i];
  }
}

bool next_combination(std::span<const std::size_t> radices, std::span<int> digits) {
  for (std::size_t i = radices.size(); i-- > 0;) {
    if (static_cast<std::size_t>(++digits[i]) < radices[i]) return true;
    digits[i] = 0;
  }
  return false;
}

}  // namespace bnmarket
