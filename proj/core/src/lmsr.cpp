#include "bnmarket/lmsr.hpp"

#include <cmath>

#include "bnmarket/error.hpp"
#include "bnmarket/inference.hpp"
#include "bnmarket/updater.hpp"

namespace bnmarket {

std::string_view to_string(UpdateMode mode) {
  return mode == UpdateMode::kExact ? "exact" : "approx";
}

std::string_view to_string(ModeRequest mode) {
  switch (mode) {
    case ModeRequest::kAuto: return "auto";
    case ModeRequest::kExact: return "exact";
    case ModeRequest::kApprox: return "approx";
  }
  return "auto";
}

ModeRequest parse_mode_request(std::string_view text) {
  if (text == "auto") return ModeRequest::kAuto;
  if (text == "exact") return ModeRequest::kExact;
  if (text == "approx") return ModeRequest::kApprox;
  throw MarketError(ErrorCode::kBadSpec, "mode must be exact, approx or auto");
}

UpdateMode parse_update_mode(std::string_view text) {
  if (text == "exact") return UpdateMode::kExact;
  if (text == "approx") return UpdateMode::kApprox;
  throw MarketError(ErrorCode::kBadSpec, "update mode must be exact or approx");
}

MarketState MarketState::create(double liquidity, BayesNet distribution) {
  if (!(liquidity > 0.0) || !std::isfinite(liquidity)) {
    throw MarketError(ErrorCode::kBadSpec, "liquidity b must be positive");
  }
  MarketState ms;
  ms.liquidity = liquidity;
  ms.distribution = std::make_shared<const BayesNet>(std::move(distribution));
  ms.created = ms.updated = Clock::now();
  return ms;
}

double formula_probability(const BayesNet& bn, const CnfSecurity& f,
                           const Valuation& evidence) {
  VariableSet free_vars;
  for (std::size_t k : f.variables()) {
    if (!evidence.assigned(k)) free_vars.push_back(k);
  }
  const Factor joint = joint_marginal(bn, free_vars, evidence);
  Valuation v = evidence;
  std::vector<int> digits(joint.vars().size(), 0);
  double p = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (std::size_t j = 0; j < digits.size(); ++j) v.set(joint.vars()[j], digits[j]);
    if (f.evaluate(v.values())) p += joint.values()[i];
    next_combination(joint.cards(), digits);
  }
  return std::min(1.0, std::max(0.0, p));
}

double price_of(const MarketState& ms, const CnfSecurity& f) {
  return formula_probability(ms.net(), f, Valuation(ms.net().size()));
}

namespace {

bool degenerate(double p) {
  return p < kDegeneratePriceEpsilon || p > 1.0 - kDegeneratePriceEpsilon;
}

}  // namespace

double cost_from_price(double liquidity, double price, double delta) {
  if (delta == 0.0) return 0.0;
  if (degenerate(price)) {
    throw MarketError(ErrorCode::kDegeneratePrice,
                      "security price is " + std::to_string(price) +
                          "; trades at price 0 or 1 are refused");
  }
  // log(e^Δ p + 1 − p) = log1p(p·expm1(Δ)), stable for small Δ.
  const double x = price * std::expm1(delta);
  if (std::isfinite(x)) return liquidity * std::log1p(x);
  return liquidity * (delta + std::log(price) + std::log1p((1.0 - price) * std::exp(-delta) / price));
}

double cost_of(const MarketState& ms, const CnfSecurity& f, double delta) {
  if (delta == 0.0) return 0.0;
  return cost_from_price(ms.liquidity, price_of(ms, f), delta);
}

double shares_from_price(double liquidity, double price, double budget) {
  if (budget == 0.0) return 0.0;
  if (degenerate(price)) {
    throw MarketError(ErrorCode::kDegeneratePrice,
                      "security price is " + std::to_string(price) +
                          "; trades at price 0 or 1 are refused");
  }
  // e^{B/b} − (1 − p) must be positive: B > b·ln(1 − p).
  const double numerator = std::expm1(budget / liquidity) + price;
  if (!(numerator > 0.0) || !std::isfinite(numerator)) {
    throw MarketError(ErrorCode::kOutOfRange,
                      "budget outside the achievable range (must exceed " +
                          std::to_string(liquidity * std::log1p(-price)) + ")");
  }
  return std::log(numerator / price);
}

double shares_for_budget(const MarketState& ms, const CnfSecurity& f, double budget) {
  if (budget == 0.0) return 0.0;
  return shares_from_price(ms.liquidity, price_of(ms, f), budget);
}

Quote quote(const MarketState& ms, const CnfSecurity& f, double delta, ModeRequest mode) {
  std::optional<std::string> warning;
  const UpdateMode resolved = resolve_mode(ms.net().dag(), f, mode, &warning);
  return quote_resolved(ms, f, delta, resolved, std::move(warning));
}

Quote quote_resolved(const MarketState& ms, const CnfSecurity& f, double delta,
                     UpdateMode mode, std::optional<std::string> warning) {
  Quote q;
  q.security = f.source_text();
  q.delta = delta;
  q.revision = ms.revision;
  q.current_price = price_of(ms, f);
  q.mode = mode;
  q.warning = std::move(warning);
  if (delta == 0.0) {
    q.post_price = q.current_price;
    return q;
  }
  q.dollar_cost = cost_from_price(ms.liquidity, q.current_price, delta);
  const UpdatePlan plan = plan_update(ms.net().dag(), f, q.mode);
  MarketState scratch = ms;
  scratch.distribution = std::make_shared<const BayesNet>(apply_plan(ms.net(), plan, delta));
  q.post_price = price_of(scratch, f);
  return q;
}

}  // namespace bnmarket
