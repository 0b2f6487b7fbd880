#pragma once

#include <memory>
#include <string>
#include <thread>

#include "bnmarket/service.hpp"

namespace httplib {
class Server;
}

namespace bnmarket {

// HTTP status for an engine error code.
int http_status(ErrorCode code);

/// JSON-over-HTTP facade for a MarketService.
///
///   GET  /health
///   GET  /markets                         list
///   POST /markets                         create from spec JSON
///   GET  /markets/{id}[?cpts=1]
///   GET  /markets/{id}/quote?security=..&shares=..|delta=..|budget=..[&mode=..]
///   POST /markets/{id}/trades             {"security", "shares"|"delta"|"budget",
///                                          "mode", "quote_revision"}
///   GET  /markets/{id}/marginals[?vars=X1,X2]
///   GET  /markets/{id}/log[?from=n]
///   GET  /markets/{id}/compat?security=..
///   POST /markets/{id}/snapshot
///   POST /markets/{id}/restore
///
/// Errors are {"error": code, "detail": text}; a stale quote adds "quote".
class HttpServer {
 public:
  explicit HttpServer(MarketService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to host:port (port 0 picks a free one) and returns the bound port.
  // Throws std::runtime_error when the address is unavailable.
  int bind(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void serve();
  // Serves on a background thread.
  void start();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  MarketService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace bnmarket
