#include "bnmarket/http_server.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

namespace bnmarket {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadSpec:
    case ErrorCode::kUnknownVariable:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kSizeLimit:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kStaleQuote:
      return 409;
    case ErrorCode::kDegeneratePrice:
    case ErrorCode::kNotStructurePreserving:
    case ErrorCode::kCompatCheckTooLarge:
    case ErrorCode::kNullEvent:
      return 422;
  }
  return 500;
}

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code,
                const std::string& detail) {
  send(res, status, json{{"error", code}, {"detail", detail}});
}

using Handler = std::function<json(const httplib::Request&)>;

// Runs a handler and turns exceptions into the error body.
httplib::Server::Handler guarded(Handler handler, int ok_status = 200) {
  return [handler = std::move(handler), ok_status](const httplib::Request& req,
                                                   httplib::Response& res) {
    try {
      send(res, ok_status, handler(req));
    } catch (const StaleQuoteError& e) {
      json body{{"error", error_code_name(e.code())}, {"detail", e.what()}, {"quote", e.requote()}};
      send(res, http_status(e.code()), body);
    } catch (const MarketError& e) {
      send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_spec", std::string("invalid JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

[[noreturn]] void bad_request(const std::string& detail) {
  throw MarketError(ErrorCode::kOutOfRange, detail);
}

double parse_number(const std::string& text, const std::string& what) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) bad_request(what + " is not a number: '" + text + "'");
  return x;
}

std::optional<double> number_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return parse_number(req.get_param_value(name), name);
}

std::optional<double> number_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) bad_request(std::string(name) + " must be a number");
  return it->get<double>();
}


std::string market_id(const httplib::Request& req) { return req.matches[1].str(); }

ModeRequest mode_of(const std::string& text) { return parse_mode_request(text); }

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body);
  if (!body.is_object()) throw MarketError(ErrorCode::kBadSpec, "request body must be an object");
  return body;
}

}  // namespace

HttpServer::HttpServer(MarketService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  httplib::Server& s = *server_;
  const std::string id = "/markets/([A-Za-z0-9_-]+)";

  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  s.Get("/health", guarded([](const httplib::Request&) { return json{{"status", "ok"}}; }));

  s.Get("/markets", guarded([this](const httplib::Request&) { return service_.list_markets(); }));

  s.Post("/markets", guarded(
                         [this](const httplib::Request& req) {
                           json spec;
                           try {
                             spec = json::parse(req.body);
                           } catch (const json::exception& e) {
                             throw MarketError(ErrorCode::kBadSpec,
                                               std::string("invalid JSON: ") + e.what());
                           }
                           return service_.create_market(spec);
                         },
                         201));

  s.Get(id, guarded([this](const httplib::Request& req) {
          const bool cpts = req.has_param("cpts") && req.get_param_value("cpts") != "0";
          return service_.describe_market(market_id(req), cpts);
        }));

  s.Get(id + "/quote", guarded([this](const httplib::Request& req) {
          if (!req.has_param("security")) bad_request("missing query parameter 'security'");
          TradeSize size{number_param(req, "shares"), number_param(req, "delta"),
                         number_param(req, "budget")};
          const ModeRequest mode =
              req.has_param("mode") ? mode_of(req.get_param_value("mode")) : ModeRequest::kAuto;
          return service_.quote(market_id(req), req.get_param_value("security"), size, mode);
        }));

  s.Post(id + "/trades", guarded([this](const httplib::Request& req) {
           const json body = parse_body(req);
           TradeRequest t;
           auto sec = body.find("security");
           if (sec == body.end() || !sec->is_string()) bad_request("'security' must be a string");
           t.security = sec->get<std::string>();
           t.size = {number_field(body, "shares"), number_field(body, "delta"),
                     number_field(body, "budget")};
           if (auto m = body.find("mode"); m != body.end()) {
             if (!m->is_string()) bad_request("'mode' must be a string");
             t.mode = mode_of(m->get<std::string>());
           }
           if (auto q = body.find("quote_revision"); q != body.end() && !q->is_null()) {
             if (!q->is_number_unsigned()) bad_request("'quote_revision' must be a revision number");
             t.quote_revision = q->get<std::uint64_t>();
           }
           return service_.trade(market_id(req), t);
         }));

  s.Get(id + "/marginals", guarded([this](const httplib::Request& req) {
          std::vector<std::string> vars;
          if (req.has_param("vars")) {
            std::stringstream ss(req.get_param_value("vars"));
            std::string name;
            while (std::getline(ss, name, ',')) {
              if (!name.empty()) vars.push_back(name);
            }
          }
          return service_.marginals(market_id(req), vars);
        }));

  s.Get(id + "/log", guarded([this](const httplib::Request& req) {
          std::uint64_t from = 1;
          if (req.has_param("from")) {
            const std::string text = req.get_param_value("from");
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), from);
            if (ec != std::errc() || ptr != text.data() + text.size()) {
              bad_request("'from' must be a sequence number");
            }
          }
          return service_.log(market_id(req), from);
        }));

  s.Get(id + "/compat", guarded([this](const httplib::Request& req) {
          if (!req.has_param("security")) bad_request("missing query parameter 'security'");
          return service_.check_compat(market_id(req), req.get_param_value("security"));
        }));

  s.Post(id + "/snapshot", guarded([this](const httplib::Request& req) {
           return service_.snapshot(market_id(req));
         }));

  s.Post(id + "/restore", guarded([this](const httplib::Request& req) {
           return service_.restore(market_id(req));
         }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "bad_request",
                 "no such route");
    }
  });
}

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port_;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace bnmarket
