#include "hgunet/service/api_server.hpp"

#include <charconv>
#include <ctime>
#include <thread>

#include <httplib.h>

#include "hgunet/error.hpp"

namespace hgunet::service {

namespace {

ApiResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::optional<std::size_t> parse_size(const std::map<std::string, std::string>& q, const std::string& key,
                                      std::size_t fallback) {
  const auto it = q.find(key);
  if (it == q.end()) return fallback;
  std::size_t v = 0;
  const auto* end = it->second.data() + it->second.size();
  const auto [ptr, ec] = std::from_chars(it->second.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

std::string utc_now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json alert_summary_json(const Alert& a) {
  return {{"id", a.id},
          {"flow_id", a.flow_id()},
          {"src_ip", a.flow.value("src_ip", "")},
          {"dst_ip", a.flow.value("dst_ip", "")},
          {"p", a.p},
          {"action", a.action},
          {"issued_at", a.issued_at_us},
          {"window_id", a.window_id},
          {"status", a.verdict ? "adjudicated" : "open"},
          {"verdict", a.verdict ? nlohmann::json(to_string(a.verdict->action)) : nlohmann::json(nullptr)}};
}

nlohmann::json alert_detail_json(const Alert& a) {
  nlohmann::json j = alert_to_json(a);
  j["status"] = a.verdict ? "adjudicated" : "open";
  j["verdict"] = a.verdict ? nlohmann::json(feedback_to_json(*a.verdict)) : nlohmann::json(nullptr);
  j["amendments"] = nlohmann::json::array();
  for (const auto& f : a.amendments) j["amendments"].push_back(nlohmann::json(feedback_to_json(f)));
  return j;
}

ApiRouter::ApiRouter(AlertStore& store, Clock clock) : store_(store), clock_(clock ? std::move(clock) : utc_now_iso) {}

ApiResponse ApiRouter::handle(const ApiRequest& req) const {
  const std::string& p = req.path;
  constexpr std::string_view kAlerts = "/v1/alerts/";
  if (req.method == "GET" && p == "/v1/health") {
    return {200, {{"status", "ok"}, {"alerts", store_.size()}, {"api", "v1"}}};
  }
  if (req.method == "GET" && p == "/v1/summary") return {200, store_.summary()};
  if (req.method == "GET" && p == "/v1/alerts") return list_alerts(req);
  if (p.rfind(kAlerts, 0) == 0) {
    std::string rest = p.substr(kAlerts.size());
    constexpr std::string_view kFeedback = "/feedback";
    if (rest.size() > kFeedback.size() && rest.compare(rest.size() - kFeedback.size(), kFeedback.size(), kFeedback) == 0) {
      const std::string id = rest.substr(0, rest.size() - kFeedback.size());
      if (req.method == "POST") return submit_feedback(id, req.body);
      return error(405, "use POST for feedback");
    }
    if (!rest.empty() && rest.find('/') == std::string::npos) {
      if (req.method == "GET") return alert_detail(rest);
      return error(405, "method not allowed");
    }
  }
  return error(404, "no route for " + req.method + " " + p);
}

ApiResponse ApiRouter::list_alerts(const ApiRequest& req) const {
  const auto page = parse_size(req.query, "page", 1);
  const auto size = parse_size(req.query, "page_size", kDefaultPageSize);
  if (!page || !size || *page == 0 || *size == 0 || *size > kMaxPageSize) {
    return error(400, "page must be ≥ 1 and page_size in [1, " + std::to_string(kMaxPageSize) + "]");
  }
  nlohmann::json items = nlohmann::json::array();
  for (const auto& a : store_.page(*page, *size)) items.push_back(alert_summary_json(a));
  return {200, {{"page", *page}, {"page_size", *size}, {"total", store_.size()}, {"alerts", items}}};
}

ApiResponse ApiRouter::alert_detail(const std::string& id) const {
  const auto a = store_.get(id);
  if (!a) return error(404, "unknown alert " + id);
  return {200, alert_detail_json(*a)};
}

ApiResponse ApiRouter::submit_feedback(const std::string& id, const std::string& body) const {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error(400, "body must be a JSON object");
  FeedbackRecord record;
  try {
    record.action = analyst_action_from_string(j.value("action", ""));
  } catch (const DataError&) {
    return error(400, "action must be approve, block or rate_limit");
  }
  if (!j.contains("rationale") || !j["rationale"].is_string() || j["rationale"].get<std::string>().empty()) {
    return error(400, "rationale is required");
  }
  record.rationale = j["rationale"].get<std::string>();
  record.analyst = j.contains("analyst") && j["analyst"].is_string() ? j["analyst"].get<std::string>() : "anonymous";
  record.submitted_at = clock_();

  FeedbackRecord existing;
  switch (store_.submit(id, record, &existing)) {
    case FeedbackOutcome::NotFound: return error(404, "unknown alert " + id);
    case FeedbackOutcome::Conflict:
      return {409, {{"error", "alert already adjudicated; submission kept as an amendment"},
                    {"verdict", feedback_to_json(existing)}}};
    case FeedbackOutcome::Created: break;
  }
  return {201, {{"verdict", feedback_to_json(existing)}}};
}

// ---- HTTP transport ---------------------------------------------------------

struct ApiServer::Impl {
  explicit Impl(AlertStore& store) : router(store) {}
  ApiRouter router;
  httplib::Server server;
  std::thread thread;
};

ApiServer::ApiServer(AlertStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto& server = impl_->server;
  const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const ApiResponse out = impl_->router.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/v1/.*)", dispatch);
  server.Post(R"(/v1/.*)", dispatch);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::serve() { impl_->server.listen_after_bind(); }

void ApiServer::start() {
  impl_->thread = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace hgunet::service
