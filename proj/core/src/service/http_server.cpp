#include "ptsim/service/http_server.hpp"

#include <charconv>
#include <functional>

#include <httplib.h>

namespace ptsim::service {

namespace {

constexpr std::size_t kMaxUpload = 512u << 20;

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const Error& e) { send_json(res, status, error_body(e)); }

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw ApiError(422, ErrorCode::InvalidArgument, "malformed JSON document", e.what());
  }
}

// Runs a handler and turns every failure into the documented error body.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ApiError& e) {
      send_error(res, e.status(), e);
    } catch (const Error& e) {
      send_error(res, 422, e);
    } catch (const Json::exception& e) {
      send_error(res, 422, Error(ErrorCode::InvalidArgument, "malformed JSON document", e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, Json{{"code", "Internal"}, {"message", e.what()}, {"detail", ""}});
    }
  };
}

ColumnMapping mapping_from_query(const httplib::Request& req) {
  ColumnMapping m;
  const auto text = [&](const char* key, std::string& out) {
    if (req.has_param(key)) out = req.get_param_value(key);
  };
  // An empty value drops the optional column.
  const auto optional = [&](const char* key, std::optional<std::string>& out) {
    if (!req.has_param(key)) return;
    const auto v = req.get_param_value(key);
    if (v.empty()) {
      out.reset();
    } else {
      out = v;
    }
  };
  text("case_id", m.case_id);
  text("activity", m.activity);
  text("end_time", m.end_time);
  optional("start_time", m.start_time);
  optional("resource", m.resource);
  return m;
}

bool is_json(const httplib::Request& req) {
  return req.get_header_value("Content-Type").find("json") != std::string::npos;
}

}  // namespace

std::pair<std::string, int> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "0.0.0.0" : addr.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? addr : addr.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad listen address", addr);
  }
  return {host, port};
}

struct HttpServer::Impl {
  Workbench& wb;
  httplib::Server server;

  explicit Impl(Workbench& w) : wb(w) {
    server.set_payload_max_length(kMaxUpload);
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (is_json(req)) {
        const Json body = parse_body(req);
        if (!body.is_object() || !body.contains("csv") || !body["csv"].is_string()) {
          throw ApiError(422, ErrorCode::InvalidArgument, "malformed JSON document", "csv: expected the log as a string");
        }
        ColumnMapping m;
        if (const auto it = body.find("mapping"); it != body.end() && !it->is_null()) m = mapping_from_json(*it);
        send_json(res, 201, wb.create_project(body["csv"].get<std::string>(), m));
      } else {
        send_json(res, 201, wb.create_project(req.body, mapping_from_query(req)));
      }
    }));
    server.Get("/projects/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, wb.get_project(req.path_params.at("id")));
    }));
    server.Patch("/projects/:id/tree", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, wb.edit_tree(req.path_params.at("id"), parse_body(req)));
    }));
    server.Put("/projects/:id/params", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, wb.update_params(req.path_params.at("id"), parse_body(req)));
    }));
    server.Post("/projects/:id/runs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 202, wb.start_run(req.path_params.at("id"), parse_body(req)));
    }));
    server.Get("/runs/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, wb.get_run(req.path_params.at("id")));
    }));
    server.Get("/runs/:id/log.csv", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(wb.run_log_csv(req.path_params.at("id")), "text/csv");
      res.status = 200;
    }));
    server.Get("/runs/:id/emd", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, wb.compare(req.path_params.at("id")));
    }));
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const Error e(res.status == 404 ? ErrorCode::NotFound : ErrorCode::InvalidArgument,
                    res.status == 404 ? "no such endpoint" : "request rejected", req.method + " " + req.path);
      res.set_content(error_body(e).dump(), "application/json");
    });
  }
};

HttpServer::HttpServer(Workbench& workbench) : impl_(std::make_unique<Impl>(workbench)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error(ErrorCode::InvalidArgument, "cannot bind listen address", host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }
void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace ptsim::service
