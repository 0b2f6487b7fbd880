#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bnmarket {

/// A discrete market variable: a name plus an ordered list of value labels.
struct VariableSpec {
  std::string name;
  std::vector<std::string> domain;

  bool operator==(const VariableSpec&) const = default;
};

/// Ordered, validated set of market variables. Position in the list is the
/// variable index used everywhere else (CPTs, valuations, dense tables).
class Schema {
 public:
  explicit Schema(std::vector<VariableSpec> variables);

  std::size_t size() const { return variables_.size(); }
  const VariableSpec& variable(std::size_t k) const { return variables_.at(k); }
  const std::vector<VariableSpec>& variables() const { return variables_; }
  std::size_t domain_size(std::size_t k) const {
    return variables_.at(k).domain.size();
  }
  const std::string& name(std::size_t k) const { return variables_.at(k).name; }
  const std::string& label(std::size_t k, int value) const;

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws MarketError(kUnknownVariable).
  std::size_t index_of(std::string_view name) const;
  std::optional<int> find_value(std::size_t k, std::string_view label) const;
  // Throws MarketError(kBadSpec) when the label is not in the domain.
  int value_of(std::size_t k, std::string_view label) const;

  // Number of joint outcomes, or nullopt if it does not fit in 64 bits.
  std::optional<std::uint64_t> outcome_count() const;

  bool operator==(const Schema& other) const {
    return variables_ == other.variables_;
  }

 private:
  std::vector<VariableSpec> variables_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

/// Partial or total assignment of value indices to variables.
class Valuation {
 public:
  static constexpr int kUnassigned = -1;

  Valuation() = default;
  explicit Valuation(std::size_t n) : values_(n, kUnassigned) {}
  explicit Valuation(std::vector<int> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool assigned(std::size_t k) const { return values_[k] != kUnassigned; }
  int operator[](std::size_t k) const { return values_[k]; }
  void set(std::size_t k, int value) { values_[k] = value; }
  void clear(std::size_t k) { values_[k] = kUnassigned; }
  bool is_total() const;
  std::vector<std::size_t> assigned_variables() const;
  std::span<const int> values() const { return values_; }

  bool operator==(const Valuation&) const = default;

 private:
  std::vector<int> values_;
};

// Builds a valuation from (variable name, label) pairs.
Valuation make_valuation(
    const Schema& schema,
    const std::vector<std::pair<std::string, std::string>>& assignments);

// Checks every assigned value lies in its variable's domain.
void validate_valuation(const Schema& schema, const Valuation& v);

std::string to_string(const Schema& schema, const Valuation& v);

// Mixed-radix encoding: digit 0 is most significant, the last digit least
// significant. Used for CPT parent contexts and dense outcome indices.
std::size_t encode_mixed_radix(std::span<const std::size_t> radices,
                               std::span<const int> digits);
void decode_mixed_radix(std::span<const std::size_t> radices, std::size_t index,
                        std::span<int> digits);

// Advances digits to the next combination (last digit fastest). Returns false
// after wrapping past the final combination.
bool next_combination(std::span<const std::size_t> radices, std::span<int> digits);

}  // namespace bnmarket
