#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "bnmarket/http_server.hpp"
#include "bnmarket/inference.hpp"
#include "bnmarket/oracle.hpp"
#include "bnmarket/service.hpp"

namespace bnmarket::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Left-aligned columns, two spaces apart.
void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out << line << '\n';
  }
}

std::string scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt(v.get<double>());
  return v.dump();
}

void print_fields(std::ostream& out, const json& obj) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, v] : obj.items()) rows.push_back({k, scalar(v)});
  print_table(out, rows);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegeneratePrice:
    case ErrorCode::kNotStructurePreserving:
    case ErrorCode::kCompatCheckTooLarge:
    case ErrorCode::kNullEvent:
      return kEngineError;
    default:
      return kValidationError;
  }
}

json read_file_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MarketError(ErrorCode::kNotFound, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw MarketError(ErrorCode::kBadSpec, path.string() + ": invalid JSON: " + e.what());
  }
}

std::string service_id(const json& created) { return created.at("id").get<std::string>(); }

// A market named on the command line: a spec file (served from memory) or
// the id of a market stored under --data-dir.
struct OpenMarket {
  std::unique_ptr<MarketService> service;
  std::string id;
  bool from_file = false;
};

OpenMarket open_market(const std::string& market, const std::string& data_dir) {
  OpenMarket m;
  if (fs::is_regular_file(market)) {
    m.service = std::make_unique<MarketService>();
    json spec = read_file_json(market);
    spec.erase("id");
    m.id = service_id(m.service->create_market(spec));
    m.from_file = true;
    return m;
  }
  if (data_dir.empty()) {
    throw MarketError(ErrorCode::kNotFound,
                      "'" + market + "' is not a file; pass --data-dir to open a stored market");
  }
  ServiceOptions options;
  options.data_dir = data_dir;
  m.service = std::make_unique<MarketService>(options);
  m.service->describe_market(market);  // throws not_found
  m.id = market;
  return m;
}

struct Options {
  std::string market;
  std::string data_dir;
  std::string security;
  std::optional<double> shares;
  std::optional<double> delta;
  std::optional<double> budget;
  std::string mode = "auto";
  std::optional<double> b;
  bool oracle = false;
  bool json_output = false;
  std::string out_file;
  std::string spec_file;
  std::string preset;
  std::vector<std::string> teams;
  std::string id;
  std::vector<std::string> vars;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t snapshot_every = 100;
  int trials = 200;
  std::uint64_t seed = 1;
};

TradeSize size_of(const Options& o) { return TradeSize{o.shares, o.delta, o.budget}; }

void emit(std::ostream& out, const Options& o, const json& j) {
  if (o.json_output) {
    out << j.dump(2) << '\n';
  } else {
    print_fields(out, j);
  }
}

void write_out(const Options& o, const json& j) {
  std::ofstream f(o.out_file, std::ios::trunc);
  f << j.dump(2) << '\n';
  if (!f) throw MarketError(ErrorCode::kBadSpec, "cannot write " + o.out_file);
}

// Spec for the current state of a market: explicit network plus b.
json current_spec(const MarketService& service, const std::string& id) {
  auto ms = service.state(id);
  json spec = network_to_json(ms->net());
  spec["b"] = ms->liquidity;
  if (!ms->net().dag().is_decomposable()) spec["allow_nondecomposable"] = true;
  return spec;
}

// Dense reference for the post-trade network, following the update recipe
// the engine applied.
JointTable oracle_post_state(const MarketState& ms, const CnfSecurity& f, double delta,
                             UpdateMode mode) {
  const JointTable pre = densify(ms.net());
  if (mode == UpdateMode::kExact) {
    const JointTable q = quantities_from_prices(pre, ms.liquidity);
    return oracle_prices(oracle_trade(q, f, delta, ms.liquidity).quantities, ms.liquidity);
  }
  const JointTable pooled = oracle_logop(pre, 1.0, densify(kl_projection(f, ms.net().dag_ptr())), delta);
  if (ms.net().dag().is_decomposable()) return pooled;
  return densify(oracle_fit(pooled, ms.net().dag_ptr()));
}

void require_dense(const MarketState& ms) {
  const auto n = ms.net().schema().outcome_count();
  if (!n || *n > kApproxKlMaxOutcomes) {
    throw MarketError(ErrorCode::kSizeLimit, "oracle checks need at most 65536 outcomes");
  }
}

int cmd_create(const Options& o, std::ostream& out) {
  json spec;
  if (!o.spec_file.empty()) {
    spec = read_file_json(o.spec_file);
  } else if (!o.preset.empty()) {
    spec["preset"] = o.preset;
    if (!o.teams.empty()) spec["teams"] = o.teams;
  } else {
    throw MarketError(ErrorCode::kBadSpec, "give --spec <file> or --preset <name>");
  }
  if (o.b) spec["b"] = *o.b;
  if (!o.id.empty()) spec["id"] = o.id;

  if (o.data_dir.empty()) {
    MarketService service;
    spec.erase("id");
    const std::string id = service_id(service.create_market(spec));
    const json result = current_spec(service, id);
    if (!o.out_file.empty()) {
      write_out(o, result);
      out << "wrote " << o.out_file << '\n';
    } else {
      out << result.dump(2) << '\n';
    }
    return kOk;
  }
  ServiceOptions options;
  options.data_dir = o.data_dir;
  MarketService service(options);
  json created = service.create_market(spec);
  if (o.json_output) {
    out << created.dump(2) << '\n';
  } else {
    print_table(out, {{"id", created["id"].get<std::string>()},
                      {"b", fmt(created["b"].get<double>())},
                      {"variables", std::to_string(created["variables"].size())},
                      {"edges", std::to_string(created["edges"].size())},
                      {"decomposable", created["decomposable"].get<bool>() ? "true" : "false"}});
  }
  return kOk;
}

int cmd_quote(const Options& o, std::ostream& out) {
  OpenMarket m = open_market(o.market, o.data_dir);
  json q = m.service->quote(m.id, o.security, size_of(o), parse_mode_request(o.mode));
  if (o.oracle) {
    auto ms = m.service->state(m.id);
    require_dense(*ms);
    const CnfSecurity f = parse_security(o.security, ms->net().dag().schema_ptr());
    const JointTable pre = densify(ms->net());
    const double delta = q["delta"].get<double>();
    double deviation = std::abs(oracle_event_probability(pre, f) - price_of(*ms, f));
    if (delta != 0.0) {
      const JointTable qv = quantities_from_prices(pre, ms->liquidity);
      deviation = std::max(deviation, std::abs(oracle_trade(qv, f, delta, ms->liquidity).cost -
                                               q["dollar_cost"].get<double>()));
      const JointTable post = oracle_post_state(*ms, f, delta, parse_update_mode(q["mode"].get<std::string>()));
      deviation = std::max(deviation, std::abs(oracle_event_probability(post, f) -
                                               q["post_price"].get<double>()));
    }
    q["oracle_max_deviation"] = deviation;
  }
  emit(out, o, q);
  return kOk;
}

int cmd_trade(const Options& o, std::ostream& out) {
  OpenMarket m = open_market(o.market, o.data_dir);
  auto before = m.service->state(m.id);
  TradeRequest request{o.security, size_of(o), parse_mode_request(o.mode), std::nullopt};
  json receipt = m.service->trade(m.id, request);
  if (o.oracle) {
    require_dense(*before);
    const CnfSecurity f = parse_security(o.security, before->net().dag().schema_ptr());
    const JointTable expected = oracle_post_state(*before, f, receipt["delta"].get<double>(),
                                                  parse_update_mode(receipt["mode"].get<std::string>()));
    receipt["oracle_max_deviation"] =
        max_abs_difference(densify(m.service->state(m.id)->net()), expected);
  }
  if (m.from_file) {
    if (!o.out_file.empty()) {
      write_out(o, current_spec(*m.service, m.id));
    } else if (!o.json_output) {
      receipt["note"] = "market file unchanged; pass --out to save the post-trade network";
    }
  }
  emit(out, o, receipt);
  return kOk;
}

int cmd_marginals(const Options& o, std::ostream& out) {
  OpenMarket m = open_market(o.market, o.data_dir);
  json result = m.service->marginals(m.id, o.vars);
  if (o.oracle) {
    auto ms = m.service->state(m.id);
    require_dense(*ms);
    const JointTable dense = densify(ms->net());
    const Schema& schema = ms->net().schema();
    const Valuation none(schema.size());
    double deviation = 0.0;
    for (const auto& row : result["marginals"]) {
      const std::size_t k = schema.index_of(row["variable"].get<std::string>());
      const auto engine = conditional_query(ms->net(), k, none);
      const auto reference = oracle_conditional(dense, k, none);
      for (std::size_t i = 0; i < engine.size(); ++i) {
        deviation = std::max(deviation, std::abs(engine[i] - reference[i]));
      }
    }
    result["oracle_max_deviation"] = deviation;
  }
  if (o.json_output) {
    out << result.dump(2) << '\n';
    return kOk;
  }
  std::vector<std::vector<std::string>> rows{{"variable", "value", "probability"}};
  for (const auto& row : result["marginals"]) {
    for (std::size_t i = 0; i < row["domain"].size(); ++i) {
      rows.push_back({i == 0 ? row["variable"].get<std::string>() : "",
                      row["domain"][i].get<std::string>(),
                      fmt(row["probabilities"][i].get<double>())});
    }
  }
  print_table(out, rows);
  out << "revision " << result["revision"].get<std::uint64_t>() << '\n';
  if (result.contains("oracle_max_deviation")) {
    out << "oracle max deviation " << fmt(result["oracle_max_deviation"].get<double>()) << '\n';
  }
  return kOk;
}

int cmd_check_compat(const Options& o, std::ostream& out) {
  OpenMarket m = open_market(o.market, o.data_dir);
  json report = m.service->check_compat(m.id, o.security);
  if (o.oracle) {
    auto ms = m.service->state(m.id);
    require_dense(*ms);
    const CnfSecurity f = parse_security(o.security, ms->net().dag().schema_ptr());
    report["oracle_local_markov"] = oracle_local_markov(oracle_pr_f(f), ms->net().dag());
  }
  if (o.json_output) {
    out << report.dump(2) << '\n';
    return kOk;
  }
  if (report["compatible"].get<bool>()) {
    out << "compatible\n";
  } else {
    const json& w = report["witness"];
    out << "incompatible\n";
    print_table(out, {{"witness", w["description"].get<std::string>()},
                      {"verified", w["verified"].get<bool>() ? "true" : "false"}});
  }
  if (report.contains("oracle_local_markov")) {
    out << "oracle local Markov check: "
        << (report["oracle_local_markov"].get<bool>() ? "holds" : "fails") << '\n';
  }
  return kOk;
}

// Engine against the dense oracle on one market: marginals, then random
// securities priced, costed and traded.
int cmd_oracle_verify(const Options& o, std::ostream& out) {
  OpenMarket m = open_market(o.market, o.data_dir);
  auto ms = m.service->state(m.id);
  require_dense(*ms);
  const BayesNet& net = ms->net();
  const Schema& schema = net.schema();
  const JointTable dense = densify(net);
  constexpr double kTolerance = 1e-9;

  struct Check {
    std::string name;
    int cases = 0;
    double worst = 0.0;
  };
  Check marginal{"marginals"}, price{"price_of"}, cost{"cost_of"}, update{"apply_trade"};
  std::size_t compatibility_checks = 0, compatibility_failures = 0;

  const Valuation none(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto engine = conditional_query(net, k, none);
    const auto reference = oracle_conditional(dense, k, none);
    for (std::size_t i = 0; i < engine.size(); ++i) {
      marginal.worst = std::max(marginal.worst, std::abs(engine[i] - reference[i]));
    }
    ++marginal.cases;
  }

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> delta_dist(-2.0, 2.0);
  for (int t = 0; t < o.trials; ++t) {
    std::string text;
    const std::size_t clauses = std::uniform_int_distribution<std::size_t>(1, 2)(rng);
    for (std::size_t c = 0; c < clauses; ++c) {
      if (c) text += " & ";
      const std::size_t lits = std::uniform_int_distribution<std::size_t>(1, 2)(rng);
      text += lits > 1 ? "(" : "";
      for (std::size_t l = 0; l < lits; ++l) {
        if (l) text += " | ";
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, schema.size() - 1)(rng);
        const int v = std::uniform_int_distribution<int>(
            0, static_cast<int>(schema.domain_size(k)) - 1)(rng);
        text += schema.name(k) + "=" + schema.label(k, v);
      }
      text += lits > 1 ? ")" : "";
    }
    const CnfSecurity f = parse_security(text, net.dag().schema_ptr());
    const double p = price_of(*ms, f);
    price.worst = std::max(price.worst, std::abs(p - oracle_event_probability(dense, f)));
    ++price.cases;

    const CompatReport report = is_compatible(f, net.dag());
    ++compatibility_checks;
    if (report.compatible != oracle_local_markov(oracle_pr_f(f), net.dag(), 1e-9)) {
      ++compatibility_failures;
    }
    if (p < kDegeneratePriceEpsilon || p > 1.0 - kDegeneratePriceEpsilon) continue;
    const double delta = delta_dist(rng);
    const JointTable q = quantities_from_prices(dense, ms->liquidity);
    cost.worst = std::max(cost.worst, std::abs(cost_of(*ms, f, delta) -
                                               oracle_trade(q, f, delta, ms->liquidity).cost));
    ++cost.cases;
    const TradeResult r = apply_trade(*ms, f, delta);
    update.worst = std::max(update.worst,
                            max_abs_difference(densify(r.state.net()),
                                               oracle_post_state(*ms, f, delta, r.receipt.mode)));
    ++update.cases;
  }

  bool ok = compatibility_failures == 0;
  json report = json::array();
  std::vector<std::vector<std::string>> rows{{"check", "cases", "max deviation", "result"}};
  for (const Check* c : {&marginal, &price, &cost, &update}) {
    const bool pass = c->worst <= kTolerance;
    ok = ok && pass;
    rows.push_back({c->name, std::to_string(c->cases), fmt(c->worst), pass ? "PASS" : "FAIL"});
    report.push_back({{"check", c->name}, {"cases", c->cases}, {"max_deviation", c->worst},
                      {"pass", pass}});
  }
  rows.push_back({"compatibility", std::to_string(compatibility_checks),
                  std::to_string(compatibility_failures) + " disagreements",
                  compatibility_failures == 0 ? "PASS" : "FAIL"});
  report.push_back({{"check", "compatibility"}, {"cases", compatibility_checks},
                    {"disagreements", compatibility_failures},
                    {"pass", compatibility_failures == 0}});
  if (o.json_output) {
    out << json{{"tolerance", kTolerance}, {"checks", report}, {"pass", ok}}.dump(2) << '\n';
  } else {
    print_table(out, rows);
  }
  return ok ? kOk : kEngineError;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_serve(const Options& o, std::ostream& out) {
  ServiceOptions options;
  options.data_dir = o.data_dir;
  options.snapshot_every = o.snapshot_every;
  MarketService service(options);
  HttpServer server(service);
  const int port = server.bind(o.host, o.port);
  out << "listening on " << o.host << ":" << port << std::endl;
  server.start();
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LMSR combinatorial prediction markets over Bayesian networks", "bnmarket"};
  app.require_subcommand(1);
  Options o;

  auto add_market = [&](CLI::App* sub) {
    sub->add_option("--market", o.market, "market spec file, or a market id with --data-dir")
        ->required();
    sub->add_option("--data-dir", o.data_dir, "directory holding stored markets");
    sub->add_flag("--json", o.json_output, "print the service JSON shape");
  };
  auto add_size = [&](CLI::App* sub) {
    auto* shares = sub->add_option("--shares", o.shares, "raw share count (delta = shares / b)");
    auto* delta = sub->add_option("--delta", o.delta, "shares in units of b");
    auto* budget = sub->add_option("--budget", o.budget, "dollars to spend");
    shares->excludes(delta)->excludes(budget);
    delta->excludes(budget);
    sub->add_option("--mode", o.mode, "exact, approx or auto")
        ->check(CLI::IsMember({"exact", "approx", "auto"}));
    sub->add_flag("--oracle", o.oracle, "cross-check against the dense oracle");
  };

  auto* create = app.add_subcommand("create", "create a market from a spec file or preset");
  create->add_option("--spec", o.spec_file, "market spec JSON file");
  create->add_option("--preset", o.preset, "preset name, e.g. tournament:m=3");
  create->add_option("--teams", o.teams, "team labels for a tournament preset")->delimiter(',');
  create->add_option("--b", o.b, "liquidity parameter");
  create->add_option("--id", o.id, "market id (with --data-dir)");
  create->add_option("--data-dir", o.data_dir, "store the market under this directory");
  create->add_option("--out", o.out_file, "write the market spec here");
  create->add_flag("--json", o.json_output, "print the service JSON shape");

  auto* quote = app.add_subcommand("quote", "price a trade without executing it");
  add_market(quote);
  quote->add_option("--security", o.security, "CNF security text")->required();
  add_size(quote);

  auto* trade = app.add_subcommand("trade", "execute a trade");
  add_market(trade);
  trade->add_option("--security", o.security, "CNF security text")->required();
  add_size(trade);
  trade->add_option("--out", o.out_file, "for a market file: write the post-trade spec here");

  auto* marginals = app.add_subcommand("marginals", "print per-variable marginals");
  add_market(marginals);
  marginals->add_option("--vars", o.vars, "variables (default all)")->delimiter(',');
  marginals->add_flag("--oracle", o.oracle, "cross-check against the dense oracle");

  auto* compat = app.add_subcommand("check-compat", "test security/DAG compatibility");
  add_market(compat);
  compat->add_option("--security", o.security, "CNF security text")->required();
  compat->add_flag("--oracle", o.oracle, "cross-check with the dense local Markov test");

  auto* verify = app.add_subcommand("oracle-verify", "run the engine-vs-oracle suite");
  add_market(verify);
  verify->add_option("--trials", o.trials, "random securities to try")->check(CLI::PositiveNumber);
  verify->add_option("--seed", o.seed, "random seed");

  auto* serve = app.add_subcommand("serve", "start the HTTP service");
  serve->add_option("--data-dir", o.data_dir, "persistence directory (empty: in memory)");
  serve->add_option("--host", o.host, "bind address");
  serve->add_option("--port", o.port, "port (0 picks a free one)");
  serve->add_option("--snapshot-every", o.snapshot_every, "trades between CPT snapshots");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (*create) return cmd_create(o, out);
    if (*quote) return cmd_quote(o, out);
    if (*trade) return cmd_trade(o, out);
    if (*marginals) return cmd_marginals(o, out);
    if (*compat) return cmd_check_compat(o, out);
    if (*verify) return cmd_oracle_verify(o, out);
    if (*serve) return cmd_serve(o, out);
  } catch (const MarketError& e) {
    if (o.json_output) {
      out << json{{"error", error_code_name(e.code())}, {"detail", e.what()}}.dump(2) << '\n';
    }
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kEngineError;
  }
  return kValidationError;
}

}  // namespace bnmarket::cli
