#include "bnmarket/factor.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "bnmarket/error.hpp"

namespace bnmarket {

Factor::Factor(VariableSet vars, std::vector<std::size_t> cards,
               std::vector<double> values)
    : vars_(std::move(vars)), cards_(std::move(cards)), values_(std::move(values)) {
  std::size_t n = 1;
  for (std::size_t c : cards_) n *= c;
  if (vars_.size() != cards_.size() || values_.size() != n ||
      !std::is_sorted(vars_.begin(), vars_.end())) {
    throw MarketError(ErrorCode::kBadSpec, "malformed factor");
  }
}

Factor Factor::from_cpt(const Cpt& cpt) {
  // CPT layout is (parents..., variable) with the variable fastest; the factor
  // wants all variables in ascending order.
  VariableSet vars = cpt.parents();
  vars.push_back(cpt.variable());
  std::vector<std::size_t> cards = cpt.parent_cards();
  cards.push_back(cpt.cardinality());

  std::vector<std::size_t> order(vars.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vars[a] < vars[b]; });
  VariableSet sorted_vars;
  std::vector<std::size_t> sorted_cards;
  for (std::size_t i : order) {
    sorted_vars.push_back(vars[i]);
    sorted_cards.push_back(cards[i]);
  }

  std::vector<double> values(cpt.table().size());
  std::vector<int> src_digits(vars.size(), 0);
  std::vector<int> dst_digits(vars.size(), 0);
  for (std::size_t i = 0; i < cpt.table().size(); ++i) {
    decode_mixed_radix(cards, i, src_digits);
    for (std::size_t j = 0; j < order.size(); ++j) dst_digits[j] = src_digits[order[j]];
    values[encode_mixed_radix(sorted_cards, dst_digits)] = cpt.table()[i];
  }
  return Factor(std::move(sorted_vars), std::move(sorted_cards), std::move(values));
}

double Factor::at(const Valuation& v) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    index = index * cards_[i] + static_cast<std::size_t>(v[vars_[i]]);
  }
  return values_[index];
}

Factor Factor::reduce(const Valuation& evidence) const {
  VariableSet keep_vars;
  std::vector<std::size_t> keep_cards;
  bool any = false;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (evidence.assigned(vars_[i])) {
      any = true;
    } else {
      keep_vars.push_back(vars_[i]);
      keep_cards.push_back(cards_[i]);
    }
  }
  if (!any) return *this;

  std::size_t n = 1;
  for (std::size_t c : keep_cards) n *= c;
  std::vector<double> out(n);
  std::vector<int> digits(vars_.size());
  std::vector<int> kept(keep_vars.size(), 0);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (evidence.assigned(vars_[i])) digits[i] = evidence[vars_[i]];
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t t = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (!evidence.assigned(vars_[i])) digits[i] = kept[t++];
    }
    out[j] = values_[encode_mixed_radix(cards_, digits)];
    next_combination(keep_cards, kept);
  }
  return Factor(std::move(keep_vars), std::move(keep_cards), std::move(out));
}

Factor Factor::sum_out(std::size_t var) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), var);
  if (it == vars_.end() || *it != var) return *this;
  const std::size_t pos = static_cast<std::size_t>(it - vars_.begin());
  std::size_t stride = 1;
  for (std::size_t i = pos + 1; i < cards_.size(); ++i) stride *= cards_[i];
  const std::size_t card = cards_[pos];

  VariableSet out_vars = vars_;
  std::vector<std::size_t> out_cards = cards_;
  out_vars.erase(out_vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out_cards.erase(out_cards.begin() + static_cast<std::ptrdiff_t>(pos));
  std::vector<double> out(values_.size() / card, 0.0);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const std::size_t outer = i / (card * stride);
    const std::size_t inner = i % stride;
    out[outer * stride + inner] += values_[i];
  }
  return Factor(std::move(out_vars), std::move(out_cards), std::move(out));
}

double Factor::total() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

Factor multiply(const Factor& a, const Factor& b) {
  VariableSet vars;
  std::vector<std::size_t> cards;
  {
    std::size_t i = 0, j = 0;
    while (i < a.vars_.size() || j < b.vars_.size()) {
      if (j == b.vars_.size() || (i < a.vars_.size() && a.vars_[i] < b.vars_[j])) {
        vars.push_back(a.vars_[i]);
        cards.push_back(a.cards_[i++]);
      } else if (i == a.vars_.size() || b.vars_[j] < a.vars_[i]) {
        vars.push_back(b.vars_[j]);
        cards.push_back(b.cards_[j++]);
      } else {
        vars.push_back(a.vars_[i]);
        cards.push_back(a.cards_[i++]);
        ++j;
      }
    }
  }

  // Stride of each result variable within a and b (0 when absent).
  auto strides_for = [&](const Factor& f) {
    std::vector<std::size_t> s(vars.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = f.vars_.size(); i-- > 0;) {
      auto pos = std::lower_bound(vars.begin(), vars.end(), f.vars_[i]) - vars.begin();
      s[static_cast<std::size_t>(pos)] = stride;
      stride *= f.cards_[i];
    }
    return s;
  };
  const auto sa = strides_for(a);
  const auto sb = strides_for(b);

  std::size_t n = 1;
  for (std::size_t c : cards) n *= c;
  std::vector<double> out(n);
  std::vector<std::size_t> digits(vars.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = a.values_[ia] * b.values_[ib];
    for (std::size_t d = vars.size(); d-- > 0;) {
      if (++digits[d] < cards[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      ia -= sa[d] * (cards[d] - 1);
      ib -= sb[d] * (cards[d] - 1);
      digits[d] = 0;
    }
  }
  return Factor(std::move(vars), std::move(cards), std::move(out));
}

Factor eliminate_all_but(std::vector<Factor> factors, const VariableSet& keep) {
  VariableSet pending;
  std::vector<std::size_t> card_of;
  for (const auto& f : factors) {
    for (std::size_t i = 0; i < f.vars().size(); ++i) {
      std::size_t v = f.vars()[i];
      if (!contains(keep, v)) pending.push_back(v);
      if (card_of.size() <= v) card_of.resize(v + 1, 0);
      card_of[v] = f.cards()[i];
    }
  }
  std::sort(pending.begin(), pending.end());
  pending.erase(std::unique(pending.begin(), pending.end()), pending.end());

  while (!pending.empty()) {
    // Pick the variable whose elimination creates the smallest table.
    std::size_t best = 0;
    double best_weight = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < pending.size(); ++idx) {
      const std::size_t v = pending[idx];
      VariableSet scope;
      for (const auto& f : factors) {
        if (contains(f.vars(), v)) scope.insert(scope.end(), f.vars().begin(), f.vars().end());
      }
      std::sort(scope.begin(), scope.end());
      scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
      double weight = 1.0;
      for (std::size_t s : scope) weight *= static_cast<double>(card_of[s]);
      if (weight < best_weight) {
        best_weight = weight;
        best = idx;
      }
    }
    const std::size_t v = pending[best];
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best));

    Factor product;
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (contains(f.vars(), v)) {
        product = multiply(product, f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    rest.push_back(product.sum_out(v));
    factors = std::move(rest);
  }

  Factor result;
  for (const auto& f : factors) result = multiply(result, f);
  return result;
}

}  // namespace bnmarket
