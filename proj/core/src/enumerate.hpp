#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bnmarket/dag.hpp"
#include "bnmarket/schema.hpp"

namespace bnmarket::detail {

inline std::optional<std::uint64_t> space_size(const Schema& schema,
                                               const VariableSet& vars) {
  std::uint64_t n = 1;
  for (std::size_t k : vars) {
    if (__builtin_mul_overflow(n, schema.domain_size(k), &n)) return std::nullopt;
  }
  return n;
}

// Visits every assignment of `vars` written into v (other entries untouched),
// last variable fastest. fn returns false to stop early; the function then
// returns false. v's entries for `vars` are left at the last visited values.
template <class Fn>
bool for_each_assignment(const Schema& schema, const VariableSet& vars, Valuation& v,
                         Fn&& fn) {
  std::vector<std::size_t> radices;
  radices.reserve(vars.size());
  for (std::size_t k : vars) {
    radices.push_back(schema.domain_size(k));
    v.set(k, 0);
  }
  std::vector<int> digits(vars.size(), 0);
  while (true) {
    if (!fn(static_cast<const Valuation&>(v))) return false;
    std::size_t d = vars.size();
    while (d-- > 0) {
      if (static_cast<std::size_t>(++digits[d]) < radices[d]) {
        v.set(vars[d], digits[d]);
        break;
      }
      digits[d] = 0;
      v.set(vars[d], 0);
    }
    if (d == static_cast<std::size_t>(-1)) return true;
  }
}

}  // namespace bnmarket::detail
