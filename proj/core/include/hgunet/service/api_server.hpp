#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "hgunet/service/alert_store.hpp"

namespace hgunet::service {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// The /v1 routes, independent of the HTTP transport:
///   GET  /v1/health
///   GET  /v1/alerts?page=1&page_size=20      newest first
///   GET  /v1/alerts/{id}
///   POST /v1/alerts/{id}/feedback            {action, rationale, analyst?}
///   GET  /v1/summary
class ApiRouter {
 public:
  using Clock = std::function<std::string()>;  // UTC ISO-8601 "now"

  explicit ApiRouter(AlertStore& store, Clock clock = {});
  ApiResponse handle(const ApiRequest& req) const;

 private:
  ApiResponse list_alerts(const ApiRequest& req) const;
  ApiResponse alert_detail(const std::string& id) const;
  ApiResponse submit_feedback(const std::string& id, const std::string& body) const;

  AlertStore& store_;
  Clock clock_;
};

inline constexpr std::size_t kDefaultPageSize = 20;
inline constexpr std::size_t kMaxPageSize = 200;

nlohmann::json alert_summary_json(const Alert& a);
nlohmann::json alert_detail_json(const Alert& a);
std::string utc_now_iso();

/// HTTP front end (cpp-httplib) for ApiRouter, with permissive CORS so a
/// separately hosted console can call it.
class ApiServer {
 public:
  explicit ApiServer(AlertStore& store);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  /// serve() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hgunet::service
