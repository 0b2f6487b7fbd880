#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "bnmarket/bayes_net.hpp"
#include "bnmarket/security.hpp"

namespace bnmarket {

enum class UpdateMode { kExact, kApprox };
enum class ModeRequest { kAuto, kExact, kApprox };

std::string_view to_string(UpdateMode mode);
std::string_view to_string(ModeRequest mode);
// Accepts "auto", "exact", "approx"; throws MarketError(kBadSpec) otherwise.
ModeRequest parse_mode_request(std::string_view text);
UpdateMode parse_update_mode(std::string_view text);

// Prices within this distance of 0 or 1 are treated as degenerate.
inline constexpr double kDegeneratePriceEpsilon = 1e-12;

/// Liquidity plus the Bayesian network that holds the market price
/// distribution. Quantity vectors never materialize; the network is the state.
struct MarketState {
  using Clock = std::chrono::system_clock;

  double liquidity = 1.0;
  std::shared_ptr<const BayesNet> distribution;
  std::uint64_t revision = 0;
  Clock::time_point created{};
  Clock::time_point updated{};

  static MarketState create(double liquidity, BayesNet distribution);

  const BayesNet& net() const { return *distribution; }
};

/// Pr(F | evidence) by summing the exact joint marginal of vars(F).
double formula_probability(const BayesNet& bn, const CnfSecurity& f,
                           const Valuation& evidence);

double price_of(const MarketState& ms, const CnfSecurity& f);

// b·ln(e^Δ·p + 1 − p). Throws kDegeneratePrice when p is 0 or 1 and Δ ≠ 0.
double cost_from_price(double liquidity, double price, double delta);
double cost_of(const MarketState& ms, const CnfSecurity& f, double delta);

// Inverse of cost_of: Δ = ln((e^{budget/b} − (1 − p)) / p).
double shares_from_price(double liquidity, double price, double budget);
double shares_for_budget(const MarketState& ms, const CnfSecurity& f, double budget);

struct Quote {
  std::string security;
  double current_price = 0.0;
  double delta = 0.0;        // shares in units of b
  double dollar_cost = 0.0;
  double post_price = 0.0;
  UpdateMode mode = UpdateMode::kExact;
  std::uint64_t revision = 0;
  // Set when the compatibility check was skipped as too large.
  std::optional<std::string> warning;
};

Quote quote(const MarketState& ms, const CnfSecurity& f, double delta,
            ModeRequest mode = ModeRequest::kAuto);
// Same, with the mode already decided (callers that cache compatibility).
Quote quote_resolved(const MarketState& ms, const CnfSecurity& f, double delta,
                     UpdateMode mode, std::optional<std::string> warning = std::nullopt);

}  // namespace bnmarket
