#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnmarket/error.hpp"
#include "bnmarket/lmsr.hpp"
#include "bnmarket/network_json.hpp"
#include "bnmarket/updater.hpp"

namespace bnmarket {

/// One executed trade as persisted in a market's log.jsonl.
struct TradeLogEntry {
  std::uint64_t seq = 0;       // equals the revision the trade produced
  std::int64_t timestamp_ms = 0;
  std::string security;        // canonical text
  double delta = 0.0;          // shares in units of b
  UpdateMode mode = UpdateMode::kExact;
  double dollar_cost = 0.0;
  double pre_price = 0.0;
  double post_price = 0.0;

  nlohmann::json to_json() const;
  static TradeLogEntry from_json(const nlohmann::json& j);
};

// Trade size: exactly one of shares (raw count, Δ = shares / b), delta (units
// of b) or budget (dollars).
struct TradeSize {
  std::optional<double> shares;
  std::optional<double> delta;
  std::optional<double> budget;
};

struct TradeRequest {
  std::string security;
  TradeSize size;
  ModeRequest mode = ModeRequest::kAuto;
  std::optional<std::uint64_t> quote_revision;
};

struct ServiceOptions {
  // Empty means in-memory only.
  std::filesystem::path data_dir;
  // A CPT snapshot is written after every this many trades (0 disables).
  std::uint64_t snapshot_every = 100;
  // Append and flush each log line before publishing the new state.
  bool flush_log = true;
};

// Raised by trade() when the request carries a quote revision that is no
// longer current. The trade is not executed; requote is the fresh quote.
class StaleQuoteError : public MarketError {
 public:
  StaleQuoteError(const std::string& detail, nlohmann::json requote)
      : MarketError(ErrorCode::kStaleQuote, detail), requote_(std::move(requote)) {}
  const nlohmann::json& requote() const { return requote_; }

 private:
  nlohmann::json requote_;
};

// Rounds to 12 significant digits for rendering.
double render_probability(double p);

/// Market lifecycle, quotes, trades, marginals and persistence. All methods
/// are thread safe. Trades on one market are serialized; quotes and reads use
/// the last published state and never wait for a trade in progress.
class MarketService {
 public:
  explicit MarketService(ServiceOptions options = {});
  ~MarketService();
  MarketService(const MarketService&) = delete;
  MarketService& operator=(const MarketService&) = delete;

  // Each method returns the JSON body the HTTP layer serves. Errors are
  // MarketError.
  nlohmann::json create_market(const nlohmann::json& spec);
  nlohmann::json describe_market(const std::string& id, bool include_cpts = false) const;
  nlohmann::json list_markets() const;
  nlohmann::json quote(const std::string& id, const std::string& security, const TradeSize& size,
                       ModeRequest mode = ModeRequest::kAuto) const;
  nlohmann::json trade(const std::string& id, const TradeRequest& request);
  nlohmann::json marginals(const std::string& id, const std::vector<std::string>& vars) const;
  nlohmann::json log(const std::string& id, std::uint64_t from = 1) const;
  nlohmann::json snapshot(const std::string& id);
  nlohmann::json check_compat(const std::string& id, const std::string& security) const;

  // Drops the in-memory market and rebuilds it from disk: latest snapshot
  // plus replay of the log tail.
  nlohmann::json restore(const std::string& id);

  std::shared_ptr<const MarketState> state(const std::string& id) const;
  std::vector<TradeLogEntry> log_entries(const std::string& id) const;
  MarketSpec spec(const std::string& id) const;
  std::vector<std::string> market_ids() const;

  // Replays entries on top of a state, checking each recomputed post price
  // against the logged one bit for bit.
  static MarketState replay(MarketState state, const std::vector<TradeLogEntry>& entries);

 private:
  struct Market;

  std::shared_ptr<Market> find(const std::string& id) const;
  std::shared_ptr<Market> load(const std::string& id) const;
  CnfSecurity parse(const Market& m, const std::string& security) const;
  UpdateMode resolve(const Market& m, const CnfSecurity& f, ModeRequest request,
                     std::optional<std::string>* warning) const;
  double delta_for(const MarketState& ms, const CnfSecurity& f, const TradeSize& size) const;
  void write_snapshot(const Market& m, const MarketState& ms) const;

  ServiceOptions options_;
  mutable std::shared_mutex markets_mutex_;
  std::map<std::string, std::shared_ptr<Market>> markets_;
  std::uint64_t next_id_ = 1;

  // (structure hash, canonical security) -> compatible; nullopt when the
  // check was too large.
  mutable std::mutex compat_mutex_;
  mutable std::map<std::pair<std::uint64_t, std::string>, std::optional<bool>> compat_cache_;
};

}  // namespace bnmarket
