#pragma once

#include <memory>
#include <string>

#include "ptsim/service/workbench.hpp"

namespace ptsim::service {

// JSON over HTTP for a Workbench:
//   POST  /projects                 text/csv body (mapping in query params) or {csv, mapping}
//   GET   /projects/{id}
//   PATCH /projects/{id}/tree       TreeEdit or {"op": "reset"}
//   PUT   /projects/{id}/params     merge patch, see Workbench::update_params
//   POST  /projects/{id}/runs       SimConfig
//   GET   /runs/{id}
//   GET   /runs/{id}/log.csv
//   GET   /runs/{id}/emd
// Failures answer `{code, message, detail}`.
class HttpServer {
 public:
  explicit HttpServer(Workbench& workbench);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws InvalidArgument
  /// when the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port" or ":port" or "port"; throws InvalidArgument otherwise.
std::pair<std::string, int> parse_address(const std::string& addr);

}  // namespace ptsim::service
