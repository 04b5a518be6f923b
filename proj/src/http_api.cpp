#include "recourse/http_api.hpp"

#include <sys/socket.h>

#include "httplib.h"

#include "recourse/cf_search.hpp"
#include "recourse/errors.hpp"

namespace recourse {

namespace {

ApiError make_error(int status, const std::string& code, const std::string& message,
                    nlohmann::json detail = nlohmann::json::object()) {
  return {status, {{"code", code}, {"message", message}, {"detail", std::move(detail)}}};
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int parse_version(const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size() && v > 0 && v < 1000000000) return static_cast<int>(v);
  } catch (const std::exception&) {
  }
  throw NotFoundError("version must be a positive integer, got '" + text + "'");
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("request body is not valid JSON: ") + e.what());
  }
}

// Wraps a handler so every failure becomes a JSON error body.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (...) {
      const ApiError e = api_error_from_current_exception();
      send_json(res, e.status, e.body);
    }
  };
}

}  // namespace

ApiError api_error_from_current_exception() {
  try {
    throw;
  } catch (const NotFoundError& e) {
    return make_error(404, "not_found", e.what());
  } catch (const DataError& e) {
    return make_error(400, "invalid_data", e.what(),
                      {{"row", e.row()}, {"column", e.column()}});
  } catch (const ShapeError& e) {
    return make_error(400, "invalid_shape", e.what());
  } catch (const ConfigError& e) {
    return make_error(400, "invalid_request", e.what());
  } catch (const IntegrityError& e) {
    return make_error(422, "integrity_error", e.what());
  } catch (const nlohmann::json::exception& e) {
    return make_error(400, "invalid_request", e.what());
  } catch (const NotConverged& e) {
    return make_error(422, "not_converged", e.what());
  } catch (const std::exception& e) {
    return make_error(500, "internal_error", e.what());
  } catch (...) {
    return make_error(500, "internal_error", "unknown failure");
  }
}

HttpApi::HttpApi(AuditService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which would let a second server
  // silently share an occupied port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_routes();
}

HttpApi::~HttpApi() { stop(); }

void HttpApi::install_routes() {
  auto& s = *server_;
  AuditService& svc = service_;

  s.Post("/models", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           const ModelRef ref = svc.register_model(parse_body(req));
           send_json(res, 201, {{"model_id", ref.model_id}, {"version", ref.version}});
         }));
  s.Get("/models", guarded([&svc](const httplib::Request&, httplib::Response& res) {
          send_json(res, 200, {{"models", svc.list_models()}});
        }));
  s.Get(R"(/models/([^/]+)/([^/]+))",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          res.status = 200;
          res.set_content(svc.get_model_text(req.matches[1], parse_version(req.matches[2])),
                          "application/json");
        }));
  s.Post(R"(/models/([^/]+)/([^/]+)/predict)",
         guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200,
                     svc.predict(req.matches[1], parse_version(req.matches[2]), parse_body(req)));
         }));
  s.Post(R"(/models/([^/]+)/([^/]+)/counterfactuals)",
         guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200,
                     svc.counterfactuals(req.matches[1], parse_version(req.matches[2]),
                                         parse_body(req)));
         }));
  s.Get(R"(/models/([^/]+)/([^/]+)/audit)",
        guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          std::int64_t after = 0;
          if (req.has_param("after")) {
            const std::string text = req.get_param_value("after");
            try {
              std::size_t used = 0;
              after = std::stoll(text, &used);
              if (used != text.size()) throw ConfigError("");
            } catch (const std::exception&) {
              throw ConfigError("'after' must be an integer record id");
            }
          }
          send_json(res, 200,
                    {{"records",
                      svc.audit(req.matches[1], parse_version(req.matches[2]), after)}});
        }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 404 ? "not_found" : "http_error";
    send_json(res, res.status,
              {{"code", code},
               {"message", "no route for this request"},
               {"detail", {{"status", res.status}}}});
  });
}

int HttpApi::bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) throw ConfigError("port must lie in 0..65535");
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound <= 0) throw ConfigError("cannot bind " + host + " on any port");
  } else if (!server_->bind_to_port(host, port)) {
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port) +
                      " (address in use or not available)");
  }
  bound_ = true;
  return bound;
}

void HttpApi::listen() {
  if (!bound_) throw ConfigError("HttpApi::listen called before bind");
  server_->listen_after_bind();
}

void HttpApi::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpApi::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace recourse
