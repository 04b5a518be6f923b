#pragma once

#include <memory>
#include <string>

#include "json.hpp"

#include "recourse/audit_service.hpp"

namespace httplib {
class Server;
}

namespace recourse {

// {code, message, detail} plus the HTTP status it maps to.
struct ApiError {
  int status = 500;
  nlohmann::json body;
};

// Maps the library exception hierarchy onto HTTP errors:
// NotFoundError 404, invalid requests 400, IntegrityError 422, others 500.
ApiError api_error_from_current_exception();

// JSON routes over an AuditService:
//   POST /models
//   GET  /models
//   GET  /models/{id}/{version}
//   POST /models/{id}/{version}/predict
//   POST /models/{id}/{version}/counterfactuals
//   GET  /models/{id}/{version}/audit?after={record_id}
class HttpApi {
 public:
  explicit HttpApi(AuditService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws ConfigError when
  // the address cannot be bound (for example, the port is taken).
  int bind(const std::string& host, int port);
  // Serves until stop(); requires a successful bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  AuditService& service_;
  std::unique_ptr<httplib::Server> server_;
  bool bound_ = false;
};

}  // namespace recourse
