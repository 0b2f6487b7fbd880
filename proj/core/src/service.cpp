#include "bnmarket/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "bnmarket/error.hpp"
#include "bnmarket/inference.hpp"

namespace bnmarket {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             MarketState::Clock::now().time_since_epoch())
      .count();
}

MarketState::Clock::time_point from_ms(std::int64_t ms) {
  return MarketState::Clock::time_point(std::chrono::milliseconds(ms));
}

std::int64_t to_ms(MarketState::Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

[[noreturn]] void bad_request(const std::string& detail) {
  throw MarketError(ErrorCode::kOutOfRange, detail);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MarketError(ErrorCode::kNotFound, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw MarketError(ErrorCode::kBadSpec, path.string() + ": " + e.what());
  }
}

// Write-then-rename so readers never see a partial file.
void write_json_file(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool valid_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, pattern);
}

json quote_json(const Quote& q, double liquidity) {
  json j{{"security", q.security},
         {"current_price", render_probability(q.current_price)},
         {"delta", q.delta},
         {"shares", q.delta * liquidity},
         {"dollar_cost", q.dollar_cost},
         {"post_price", render_probability(q.post_price)},
         {"mode", to_string(q.mode)},
         {"revision", q.revision}};
  if (q.warning) j["warning"] = *q.warning;
  return j;
}

json receipt_json(const TradeReceipt& r, double liquidity) {
  json j{{"security", r.security},
         {"delta", r.delta},
         {"shares", r.delta * liquidity},
         {"dollar_cost", r.dollar_cost},
         {"mode", to_string(r.mode)},
         {"pre_price", render_probability(r.pre_price)},
         {"post_price", render_probability(r.post_price)},
         {"revision", r.revision}};
  if (r.approx_kl) j["approx_kl"] = *r.approx_kl;
  if (r.warning) j["warning"] = *r.warning;
  return j;
}

std::string snapshot_name(std::uint64_t revision) {
  return "snapshot-" + std::to_string(revision) + ".json";
}

}  // namespace

double render_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", p);
  return std::strtod(buf, nullptr);
}

json TradeLogEntry::to_json() const {
  return json{{"seq", seq},
              {"ts", timestamp_ms},
              {"security", security},
              {"delta", delta},
              {"mode", bnmarket::to_string(mode)},
              {"cost", dollar_cost},
              {"pre_price", pre_price},
              {"post_price", post_price}};
}

TradeLogEntry TradeLogEntry::from_json(const json& j) {
  TradeLogEntry e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.timestamp_ms = j.at("ts").get<std::int64_t>();
    e.security = j.at("security").get<std::string>();
    e.delta = j.at("delta").get<double>();
    e.mode = parse_update_mode(j.at("mode").get<std::string>());
    e.dollar_cost = j.at("cost").get<double>();
    e.pre_price = j.at("pre_price").get<double>();
    e.post_price = j.at("post_price").get<double>();
  } catch (const json::exception& ex) {
    throw MarketError(ErrorCode::kBadSpec, std::string("malformed log entry: ") + ex.what());
  }
  return e;
}

struct MarketService::Market {
  std::string id;
  MarketSpec spec;
  fs::path dir;  // empty when not persisted
  std::int64_t created_ms = 0;

  std::mutex writer;  // serializes trades, snapshots and restores

  mutable std::mutex publish;  // guards the two fields below
  std::shared_ptr<const MarketState> published;
  std::vector<TradeLogEntry> entries;

  std::ofstream log_stream;  // owned by the writer

  std::shared_ptr<const MarketState> current() const {
    std::lock_guard lock(publish);
    return published;
  }
};

MarketService::MarketService(ServiceOptions options) : options_(std::move(options)) {
  if (options_.data_dir.empty()) return;
  fs::create_directories(options_.data_dir);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(options_.data_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "market.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    markets_[id] = load(id);
    if (id.size() > 1 && id[0] == 'm' &&
        std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(c); })) {
      next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
    }
  }
}

MarketService::~MarketService() = default;

std::shared_ptr<MarketService::Market> MarketService::find(const std::string& id) const {
  std::shared_lock lock(markets_mutex_);
  auto it = markets_.find(id);
  if (it == markets_.end()) throw MarketError(ErrorCode::kNotFound, "no market '" + id + "'");
  return it->second;
}

std::shared_ptr<MarketService::Market> MarketService::load(const std::string& id) const {
  auto m = std::make_shared<Market>();
  m->id = id;
  m->dir = options_.data_dir / id;
  const json meta = read_json_file(m->dir / "market.json");
  m->spec = parse_market_spec(meta.at("spec"));
  m->created_ms = meta.value("created_ms", std::int64_t{0});
  MarketState state = MarketState::create(m->spec.liquidity, *m->spec.net);
  state.created = state.updated = from_ms(m->created_ms);

  // Read the log. A final line without its newline is a torn append from a
  // crash and is dropped; anything else malformed is an error.
  const fs::path log_path = m->dir / "log.jsonl";
  std::vector<TradeLogEntry> entries;
  std::uintmax_t good_bytes = 0;
  if (fs::exists(log_path)) {
    std::ifstream in(log_path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < content.size()) {
      const std::size_t nl = content.find('\n', pos);
      if (nl == std::string::npos) break;
      const std::string line = content.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.empty()) {
        good_bytes = pos;
        continue;
      }
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        throw MarketError(ErrorCode::kBadSpec,
                          "corrupt log line " + std::to_string(entries.size() + 1) + " in " + id);
      }
      TradeLogEntry e = TradeLogEntry::from_json(j);
      if (e.seq != entries.size() + 1) {
        throw MarketError(ErrorCode::kBadSpec, "log sequence gap in market " + id);
      }
      entries.push_back(std::move(e));
      good_bytes = pos;
    }
    if (good_bytes != content.size()) fs::resize_file(log_path, good_bytes);
  }

  // Latest usable snapshot, then the tail of the log.
  std::uint64_t base = 0;
  for (const auto& f : fs::directory_iterator(m->dir)) {
    const std::string name = f.path().filename().string();
    std::uint64_t rev = 0;
    if (std::sscanf(name.c_str(), "snapshot-%lu.json", &rev) == 1 &&
        name == snapshot_name(rev) && rev <= entries.size() && rev > base) {
      base = rev;
    }
  }
  if (base > 0) {
    const json snap = read_json_file(m->dir / snapshot_name(base));
    state.distribution = std::make_shared<const BayesNet>(
        cpt_tables_from_json(state.net().dag_ptr(), snap.at("cpts")));
    state.revision = base;
    state.updated = from_ms(entries[base - 1].timestamp_ms);
  }
  const std::vector<TradeLogEntry> tail(entries.begin() + static_cast<std::ptrdiff_t>(base),
                                        entries.end());
  state = replay(std::move(state), tail);

  m->published = std::make_shared<const MarketState>(std::move(state));
  m->entries = std::move(entries);
  m->log_stream.open(log_path, std::ios::app | std::ios::binary);
  return m;
}

MarketState MarketService::replay(MarketState state, const std::vector<TradeLogEntry>& entries) {
  for (const TradeLogEntry& e : entries) {
    if (e.seq != state.revision + 1) {
      throw MarketError(ErrorCode::kBadSpec, "replay expects seq " +
                                                 std::to_string(state.revision + 1) + ", got " +
                                                 std::to_string(e.seq));
    }
    const CnfSecurity f = parse_security(e.security, state.net().dag().schema_ptr());
    TradeResult r = apply_trade_resolved(state, f, e.delta, e.mode);
    if (r.receipt.post_price != e.post_price || r.receipt.dollar_cost != e.dollar_cost) {
      throw MarketError(ErrorCode::kBadSpec,
                        "replay diverged from the log at seq " + std::to_string(e.seq));
    }
    state = std::move(r.state);
    state.updated = from_ms(e.timestamp_ms);
  }
  return state;
}

json MarketService::create_market(const json& spec_json) {
  MarketSpec spec = parse_market_spec(spec_json);
  std::string id;
  if (auto it = spec_json.find("id"); it != spec_json.end()) {
    if (!it->is_string() || !valid_id(it->get<std::string>())) {
      throw MarketError(ErrorCode::kBadSpec, "'id' must match [A-Za-z0-9_-]{1,64}");
    }
    id = it->get<std::string>();
  }

  auto m = std::make_shared<Market>();
  m->spec = std::move(spec);
  m->created_ms = now_ms();
  MarketState state = MarketState::create(m->spec.liquidity, *m->spec.net);
  state.created = state.updated = from_ms(m->created_ms);
  m->published = std::make_shared<const MarketState>(std::move(state));

  std::unique_lock lock(markets_mutex_);
  if (id.empty()) {
    do {
      id = "m" + std::to_string(next_id_++);
    } while (markets_.count(id) != 0);
  } else if (markets_.count(id) != 0) {
    throw MarketError(ErrorCode::kOutOfRange, "market '" + id + "' already exists");
  }
  m->id = id;
  if (!options_.data_dir.empty()) {
    m->dir = options_.data_dir / id;
    fs::create_directories(m->dir);
    write_json_file(m->dir / "market.json",
                    json{{"id", id}, {"created_ms", m->created_ms}, {"spec", m->spec.source}});
    m->log_stream.open(m->dir / "log.jsonl", std::ios::app | std::ios::binary);
  }
  markets_[id] = m;
  lock.unlock();
  return describe_market(id);
}

json MarketService::describe_market(const std::string& id, bool include_cpts) const {
  auto m = find(id);
  auto ms = m->current();
  const BayesNet& net = ms->net();
  json network = network_to_json(net);
  json j{{"id", id},
         {"b", ms->liquidity},
         {"revision", ms->revision},
         {"created_ms", to_ms(ms->created)},
         {"updated_ms", to_ms(ms->updated)},
         {"decomposable", net.dag().is_decomposable()},
         {"variables", network["variables"]},
         {"edges", network["edges"]}};
  if (auto p = m->spec.source.find("preset"); p != m->spec.source.end()) j["preset"] = *p;
  if (include_cpts) {
    for (auto& [name, rows] : network["cpts"].items()) {
      for (auto& row : rows) {
        for (auto& [label, p] : row["row"].items()) p = render_probability(p.get<double>());
      }
    }
    j["cpts"] = network["cpts"];
  }
  return j;
}

json MarketService::list_markets() const {
  json out = json::array();
  for (const auto& id : market_ids()) {
    auto ms = find(id)->current();
    out.push_back({{"id", id}, {"revision", ms->revision}, {"b", ms->liquidity}});
  }
  return json{{"markets", out}};
}

CnfSecurity MarketService::parse(const Market& m, const std::string& security) const {
  return parse_security(security, m.spec.net->dag().schema_ptr());
}

UpdateMode MarketService::resolve(const Market& m, const CnfSecurity& f, ModeRequest request,
                                  std::optional<std::string>* warning) const {
  if (request == ModeRequest::kApprox) return UpdateMode::kApprox;
  const Dag& dag = m.spec.net->dag();
  const auto key = std::make_pair(dag.structure_hash(), f.to_string());
  std::optional<bool> compatible;
  bool cached = false;
  {
    std::lock_guard lock(compat_mutex_);
    if (auto it = compat_cache_.find(key); it != compat_cache_.end()) {
      compatible = it->second;
      cached = true;
    }
  }
  if (!cached) {
    try {
      compatible = is_compatible(f, dag).compatible;
    } catch (const MarketError& e) {
      if (e.code() != ErrorCode::kCompatCheckTooLarge) throw;
    }
    std::lock_guard lock(compat_mutex_);
    compat_cache_[key] = compatible;
  }
  if (!compatible) {
    if (request == ModeRequest::kExact) {
      throw MarketError(ErrorCode::kCompatCheckTooLarge,
                        "compatibility check too large for " + f.to_string());
    }
    if (warning) *warning = "compatibility check too large; approximate update used";
    return UpdateMode::kApprox;
  }
  const bool exact = *compatible && dag.is_decomposable();
  if (request == ModeRequest::kExact && !exact) {
    throw MarketError(ErrorCode::kNotStructurePreserving,
                      dag.is_decomposable()
                          ? "security " + f.to_string() + " is not structure preserving"
                          : "exact updates need a decomposable DAG");
  }
  return exact ? UpdateMode::kExact : UpdateMode::kApprox;
}

double MarketService::delta_for(const MarketState& ms, const CnfSecurity& f,
                                const TradeSize& size) const {
  const int given = size.shares.has_value() + size.delta.has_value() + size.budget.has_value();
  if (given != 1) bad_request("give exactly one of shares, delta or budget");
  auto finite = [](double x, const char* what) {
    if (!std::isfinite(x)) bad_request(std::string(what) + " must be finite");
    return x;
  };
  if (size.shares) return finite(*size.shares, "shares") / ms.liquidity;
  if (size.delta) return finite(*size.delta, "delta");
  return shares_for_budget(ms, f, finite(*size.budget, "budget"));
}

json MarketService::quote(const std::string& id, const std::string& security,
                          const TradeSize& size, ModeRequest mode) const {
  auto m = find(id);
  auto ms = m->current();
  const CnfSecurity f = parse(*m, security);
  const double delta = delta_for(*ms, f, size);
  std::optional<std::string> warning;
  const UpdateMode resolved = resolve(*m, f, mode, &warning);
  return quote_json(quote_resolved(*ms, f, delta, resolved, std::move(warning)), ms->liquidity);
}

json MarketService::trade(const std::string& id, const TradeRequest& request) {
  auto m = find(id);
  std::unique_lock writer(m->writer);
  // A restore may have swapped the market while we waited for the lock.
  while (find(id) != m) {
    writer.unlock();
    m = find(id);
    writer = std::unique_lock(m->writer);
  }
  auto ms = m->current();
  const CnfSecurity f = parse(*m, request.security);
  std::optional<std::string> warning;
  const UpdateMode mode = resolve(*m, f, request.mode, &warning);

  if (request.quote_revision && *request.quote_revision != ms->revision) {
    json requote = quote_json(
        quote_resolved(*ms, f, delta_for(*ms, f, request.size), mode, warning), ms->liquidity);
    throw StaleQuoteError("quote was for revision " + std::to_string(*request.quote_revision) +
                              ", market is at revision " + std::to_string(ms->revision),
                          std::move(requote));
  }

  const double delta = delta_for(*ms, f, request.size);
  TradeResult result = apply_trade_resolved(*ms, f, delta, mode, std::move(warning));
  if (delta == 0.0) return receipt_json(result.receipt, ms->liquidity);

  TradeLogEntry entry;
  entry.seq = result.state.revision;
  entry.timestamp_ms = now_ms();
  entry.security = f.to_string();
  entry.delta = delta;
  entry.mode = result.receipt.mode;
  entry.dollar_cost = result.receipt.dollar_cost;
  entry.pre_price = result.receipt.pre_price;
  entry.post_price = result.receipt.post_price;
  result.state.updated = from_ms(entry.timestamp_ms);
  result.receipt.security = entry.security;

  if (m->log_stream.is_open()) {
    m->log_stream << entry.to_json().dump() << '\n';
    if (options_.flush_log) m->log_stream.flush();
    if (!m->log_stream) {
      throw std::runtime_error("cannot append to the trade log of market " + id);
    }
  }
  auto next = std::make_shared<const MarketState>(std::move(result.state));
  {
    std::lock_guard lock(m->publish);
    m->published = next;
    m->entries.push_back(entry);
  }
  if (!m->dir.empty() && options_.snapshot_every > 0 &&
      entry.seq % options_.snapshot_every == 0) {
    write_snapshot(*m, *next);
  }
  return receipt_json(result.receipt, next->liquidity);
}

json MarketService::marginals(const std::string& id, const std::vector<std::string>& vars) const {
  auto m = find(id);
  auto ms = m->current();
  const BayesNet& net = ms->net();
  const Schema& schema = net.schema();
  std::vector<std::size_t> targets;
  if (vars.empty()) {
    for (std::size_t k = 0; k < schema.size(); ++k) targets.push_back(k);
  } else {
    for (const auto& name : vars) targets.push_back(schema.index_of(name));
  }
  json rows = json::array();
  const Valuation none(schema.size());
  for (std::size_t k : targets) {
    json probs = json::array();
    for (double p : conditional_query(net, k, none)) probs.push_back(render_probability(p));
    rows.push_back({{"variable", schema.name(k)},
                    {"domain", schema.variable(k).domain},
                    {"probabilities", std::move(probs)}});
  }
  return json{{"revision", ms->revision}, {"marginals", std::move(rows)}};
}

json MarketService::log(const std::string& id, std::uint64_t from) const {
  auto m = find(id);
  json out = json::array();
  std::uint64_t last = 0;
  {
    std::lock_guard lock(m->publish);
    for (const auto& e : m->entries) {
      last = e.seq;
      if (e.seq < from) continue;
      json j = e.to_json();
      j["pre_price"] = render_probability(e.pre_price);
      j["post_price"] = render_probability(e.post_price);
      out.push_back(std::move(j));
    }
  }
  return json{{"entries", std::move(out)}, {"next", last + 1}};
}

void MarketService::write_snapshot(const Market& m, const MarketState& ms) const {
  write_json_file(m.dir / snapshot_name(ms.revision),
                  json{{"revision", ms.revision}, {"cpts", cpt_tables_to_json(ms.net())}});
}

json MarketService::snapshot(const std::string& id) {
  auto m = find(id);
  if (m->dir.empty()) bad_request("the service runs without a data directory");
  std::lock_guard writer(m->writer);
  auto ms = m->current();
  write_snapshot(*m, *ms);
  return json{{"id", id},
              {"revision", ms->revision},
              {"path", (m->dir / snapshot_name(ms->revision)).string()}};
}

json MarketService::restore(const std::string& id) {
  auto m = find(id);
  if (m->dir.empty()) bad_request("the service runs without a data directory");
  {
    std::lock_guard writer(m->writer);
    m->log_stream.close();
    std::shared_ptr<Market> fresh;
    try {
      fresh = load(id);
    } catch (...) {
      // Keep serving the in-memory market.
      m->log_stream.open(m->dir / "log.jsonl", std::ios::app | std::ios::binary);
      throw;
    }
    std::unique_lock lock(markets_mutex_);
    markets_[id] = fresh;
  }
  return describe_market(id);
}

json MarketService::check_compat(const std::string& id, const std::string& security) const {
  auto m = find(id);
  const CnfSecurity f = parse(*m, security);
  const Dag& dag = m->spec.net->dag();
  json j{{"security", f.to_string()}, {"decomposable", dag.is_decomposable()}};
  const CompatReport report = is_compatible(f, dag);
  j["compatible"] = report.compatible;
  if (report.witness) {
    const Schema& schema = dag.schema();
    const CompatWitness& w = *report.witness;
    j["witness"] = {{"variable", schema.name(w.variable)},
                    {"value1", schema.label(w.variable, w.value1)},
                    {"value2", schema.label(w.variable, w.value2)},
                    {"blanket", to_string(schema, w.blanket)},
                    {"u", to_string(schema, w.inside)},
                    {"w", to_string(schema, w.outside)},
                    {"verified", verify_witness(f, w)},
                    {"description", describe_witness(f, w)}};
  }
  return j;
}

std::shared_ptr<const MarketState> MarketService::state(const std::string& id) const {
  return find(id)->current();
}

std::vector<TradeLogEntry> MarketService::log_entries(const std::string& id) const {
  auto m = find(id);
  std::lock_guard lock(m->publish);
  return m->entries;
}

MarketSpec MarketService::spec(const std::string& id) const { return find(id)->spec; }

std::vector<std::string> MarketService::market_ids() const {
  std::shared_lock lock(markets_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, m] : markets_) ids.push_back(id);
  return ids;
}

}  // namespace bnmarket
