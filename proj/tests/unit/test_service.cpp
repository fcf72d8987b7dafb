#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "hgunet/error.hpp"
#include "hgunet/service/alert_store.hpp"
#include "hgunet/service/api_server.hpp"
#include "hgunet/service/decision.hpp"
#include "hgunet/service/forensic_log.hpp"
#include "hgunet/service/pipeline.hpp"
#include "hgunet/service/service_config.hpp"
#include "hgunet/service/sha256.hpp"
#include "testkit.hpp"

using namespace hgunet;
using namespace hgunet::service;

namespace {

constexpr double kEps = 1e-12;

void write_log(const std::filesystem::path& path, std::size_t records) {
  ForensicLog log(path, {{"run", "unit"}});
  for (std::size_t i = 0; i < records; ++i) {
    log.append({{"type", "flow"}, {"flow_id", "f" + std::to_string(i)}, {"p", 0.125 * static_cast<double>(i % 8)}});
  }
  log.flush();
}

// Byte offset → sequence number of the line containing it.
std::vector<std::uint64_t> line_of_byte(const std::string& text) {
  std::vector<std::uint64_t> out(text.size());
  std::uint64_t line = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    out[i] = line;
    if (text[i] == '\n') ++line;
  }
  return out;
}

Alert make_alert(std::uint64_t seq, const std::string& flow_id) {
  Alert a;
  a.seq = seq;
  a.id = "a" + std::to_string(seq);
  a.flow = {{"flow_id", flow_id}, {"src_ip", "1.1.1.1"}, {"dst_ip", "2.2.2.2"}};
  a.p = 0.7;
  a.action = "rate_limit";
  return a;
}

ApiResponse call(ApiRouter& r, std::string method, std::string path, std::string body = {},
                 std::map<std::string, std::string> query = {}) {
  ApiRequest req{std::move(method), std::move(path), {}, std::move(body)};
  for (auto& [k, v] : query) req.query.emplace(k, v);
  return r.handle(req);
}

}  // namespace

TEST(Decision, WorkedExamples) {
  const DecisionThresholds t;
  EXPECT_EQ(decide(0.95, t).action, Action::Block);
  const auto grey = decide(0.7, t);
  EXPECT_EQ(grey.action, Action::RateLimit);
  EXPECT_TRUE(grey.analyst_alert);
  EXPECT_EQ(decide(0.9, t).action, Action::Block);
  EXPECT_FALSE(decide(0.9, t).analyst_alert);
}

TEST(Decision, BoundaryTable) {
  const DecisionThresholds t;
  const double below_auto = std::nextafter(t.tau_auto, 0.0);
  const double below_analyst = std::nextafter(t.tau_analyst, 0.0);
  struct Case {
    double p;
    Action action;
    bool alert;
  };
  const std::vector<Case> cases = {{0.0, Action::None, false},         {below_analyst, Action::Alert, false},
                                   {t.tau_analyst, Action::RateLimit, true}, {below_auto, Action::RateLimit, true},
                                   {t.tau_auto, Action::Block, false},      {1.0, Action::Block, false},
                                   {std::nextafter(t.notify_floor, 0.0), Action::None, false},
                                   {t.notify_floor, Action::Alert, false}};
  for (const auto& c : cases) {
    const auto d = decide(c.p, t);
    EXPECT_EQ(d.action, c.action) << c.p;
    EXPECT_EQ(d.analyst_alert, c.alert) << c.p;
  }
}

TEST(Decision, GreyZoneToggleAndErrors) {
  DecisionThresholds t;
  t.grey_zone_rate_limit = false;
  const auto d = decide(0.6, t);
  EXPECT_EQ(d.action, Action::Alert);
  EXPECT_TRUE(d.analyst_alert);
  EXPECT_THROW(decide(-kEps, t), DataError);
  EXPECT_THROW(decide(1.0 + kEps, t), DataError);
  EXPECT_THROW(decide(std::numeric_limits<double>::quiet_NaN(), t), DataError);
  t.tau_analyst = 0.95;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Decision, VerdictExpiry) {
  const DecisionThresholds t;
  const auto block = make_verdict("f", 0.99, t, 1'000'000);
  ASSERT_TRUE(block.expires_at_us);
  EXPECT_EQ(*block.expires_at_us, 1'000'000 + 300'000'000);
  EXPECT_FALSE(make_verdict("f", 0.3, t, 5).expires_at_us);
  const auto j = verdict_to_json(block);
  EXPECT_EQ(j["action"], "block");
  EXPECT_EQ(j["source"], "auto");
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ForensicLog, UntouchedAndEmptyLogsVerify) {
  testkit::TempDir dir("flog");
  write_log(dir / "log.jsonl", 20);
  const auto v = verify_forensic_log(dir / "log.jsonl");
  EXPECT_TRUE(v.ok) << v.reason;
  EXPECT_EQ(v.records, 21u);
  std::ofstream(dir / "empty.jsonl").close();
  EXPECT_TRUE(verify_forensic_log(dir / "empty.jsonl").ok);
}

TEST(ForensicLog, ChainMatchesIndependentRecomputation) {
  testkit::TempDir dir("flog");
  write_log(dir / "log.jsonl", 5);
  std::ifstream in(dir / "log.jsonl");
  std::string line, prev(64, '0');
  std::uint64_t seq = 0;
  while (std::getline(in, line)) {
    const std::string prefix = "{\"body\":";
    const std::string suffix_key = ",\"chain_hash\":\"";
    ASSERT_EQ(line.rfind(prefix, 0), 0u);
    const auto cut = line.rfind(suffix_key);
    const std::string body = line.substr(prefix.size(), cut - prefix.size());
    const std::string hash = line.substr(cut + suffix_key.size(), 64);
    EXPECT_EQ(hash, sha256_hex(prev + body));
    EXPECT_EQ(nlohmann::json::parse(body)["seq"], seq++);
    prev = hash;
  }
  EXPECT_EQ(seq, 6u);
}

TEST(ForensicLog, EverySingleByteMutationIsLocated) {
  testkit::TempDir dir("flog");
  write_log(dir / "log.jsonl", 12);
  const std::string original = testkit::read_file(dir / "log.jsonl");
  const auto owner = line_of_byte(original);
  for (std::size_t i = 0; i < original.size(); ++i) {
    for (char replacement : {'0', 'x', '\n', '"'}) {
      if (original[i] == replacement) continue;
      std::string mutated = original;
      mutated[i] = replacement;
      std::istringstream in(mutated);
      const auto v = verify_forensic_log(in);
      ASSERT_FALSE(v.ok) << "byte " << i;
      ASSERT_TRUE(v.first_corrupt);
      ASSERT_EQ(*v.first_corrupt, owner[i]) << "byte " << i << " -> " << replacement << ": " << v.reason;
    }
  }
}

TEST(ForensicLog, TruncationDetected) {
  testkit::TempDir dir("flog");
  write_log(dir / "log.jsonl", 4);
  const std::string original = testkit::read_file(dir / "log.jsonl");
  std::istringstream in(original.substr(0, original.size() - 1));
  const auto v = verify_forensic_log(in);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(*v.first_corrupt, 4u);
}

TEST(AlertStore, FirstVerdictWinsAndAmendmentsKept) {
  AlertStore store;
  store.add(make_alert(0, "f0"));
  store.add(make_alert(1, "f1"));
  FeedbackRecord fb{"a0", "f0", AnalystAction::Approve, "looks fine", "alice", "t"};
  EXPECT_EQ(store.submit("a0", fb), FeedbackOutcome::Created);
  FeedbackRecord later = fb;
  later.action = AnalystAction::Block;
  FeedbackRecord existing;
  EXPECT_EQ(store.submit("a0", later, &existing), FeedbackOutcome::Conflict);
  EXPECT_EQ(existing.action, AnalystAction::Approve);
  EXPECT_EQ(store.submit("zz", fb), FeedbackOutcome::NotFound);
  const auto a = store.get("a0");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->verdict->action, AnalystAction::Approve);
  EXPECT_EQ(a->amendments.size(), 1u);
  const auto page = store.page(1, 10);
  ASSERT_EQ(page.size(), 2u);
  EXPECT_EQ(page[0].id, "a1");  // newest first
  EXPECT_TRUE(store.page(2, 10).empty());
}

TEST(AlertStore, ReloadsRunDirectory) {
  testkit::TempDir dir("store");
  {
    std::ofstream alerts(dir / "alerts.jsonl");
    alerts << alert_to_json(make_alert(0, "f0")).dump() << '\n' << alert_to_json(make_alert(1, "f1")).dump() << '\n';
  }
  {
    AlertStore store;
    AlertStore::load_run(store, dir.path());
    store.attach_feedback_log(dir / "feedback.jsonl");
    store.submit("a1", {"a1", "f1", AnalystAction::Block, "burst", "bob", "t"});
    store.submit("a1", {"a1", "f1", AnalystAction::Approve, "second thoughts", "bob", "t"});
  }
  AlertStore reloaded;
  AlertStore::load_run(reloaded, dir.path());
  EXPECT_EQ(reloaded.size(), 2u);
  const auto a = reloaded.get("a1");
  ASSERT_TRUE(a && a->verdict);
  EXPECT_EQ(a->verdict->action, AnalystAction::Block);
  EXPECT_EQ(a->amendments.size(), 1u);
}

TEST(ApiRouter, RoutesAndErrors) {
  AlertStore store;
  for (std::uint64_t i = 0; i < 25; ++i) store.add(make_alert(i, "f" + std::to_string(i)));
  store.set_summary({{"flows_scored", 123}});
  ApiRouter router(store, [] { return std::string("2026-01-01T00:00:00Z"); });

  EXPECT_EQ(call(router, "GET", "/v1/health").status, 200);
  EXPECT_EQ(call(router, "GET", "/v1/summary").body["flows_scored"], 123);

  const auto list = call(router, "GET", "/v1/alerts");
  ASSERT_EQ(list.status, 200);
  EXPECT_EQ(list.body["total"], 25);
  EXPECT_EQ(list.body["alerts"].size(), 20u);
  EXPECT_EQ(list.body["alerts"][0]["id"], "a24");
  EXPECT_EQ(list.body["alerts"][0]["status"], "open");
  const auto page2 = call(router, "GET", "/v1/alerts", {}, {{"page", "2"}, {"page_size", "20"}});
  EXPECT_EQ(page2.body["alerts"].size(), 5u);
  EXPECT_EQ(call(router, "GET", "/v1/alerts", {}, {{"page", "0"}}).status, 400);
  EXPECT_EQ(call(router, "GET", "/v1/alerts", {}, {{"page_size", "201"}}).status, 400);
  EXPECT_EQ(call(router, "GET", "/v1/alerts", {}, {{"page", "x"}}).status, 400);

  EXPECT_EQ(call(router, "GET", "/v1/alerts/a3").body["flow"]["flow_id"], "f3");
  EXPECT_EQ(call(router, "GET", "/v1/alerts/nope").status, 404);
  EXPECT_EQ(call(router, "GET", "/v1/nothing").status, 404);
  EXPECT_EQ(call(router, "DELETE", "/v1/alerts/a3").status, 405);

  const std::string path = "/v1/alerts/a3/feedback";
  EXPECT_EQ(call(router, "POST", path, R"({"action":"approve","rationale":""})").status, 400);
  EXPECT_EQ(call(router, "POST", path, R"({"action":"ignore","rationale":"x"})").status, 400);
  EXPECT_EQ(call(router, "POST", path, "not json").status, 400);
  EXPECT_EQ(call(router, "POST", "/v1/alerts/zz/feedback", R"({"action":"approve","rationale":"x"})").status, 404);
  const auto created = call(router, "POST", path, R"({"action":"approve","rationale":"known backup job"})");
  ASSERT_EQ(created.status, 201);
  EXPECT_EQ(created.body["verdict"]["analyst"], "anonymous");
  EXPECT_EQ(created.body["verdict"]["submitted_at"], "2026-01-01T00:00:00Z");
  const auto conflict = call(router, "POST", path, R"({"action":"block","rationale":"changed my mind"})");
  EXPECT_EQ(conflict.status, 409);
  EXPECT_EQ(conflict.body["verdict"]["action"], "approve");
  const auto detail = call(router, "GET", "/v1/alerts/a3");
  EXPECT_EQ(detail.body["verdict"]["action"], "approve");
  EXPECT_EQ(detail.body["status"], "adjudicated");
  EXPECT_EQ(detail.body["amendments"].size(), 1u);
}

TEST(ServiceConfig, RelativeModelPathAndListen) {
  testkit::TempDir dir("svc");
  std::ofstream(dir / "service.json") << R"({"model":"bundle.json","thresholds":{"tau_analyst":0.4,"tau_auto":0.8}})";
  const auto cfg = load_service_config(dir / "service.json");
  EXPECT_EQ(std::filesystem::path(cfg.model_path), dir / "bundle.json");
  EXPECT_DOUBLE_EQ(cfg.thresholds.tau_auto, 0.8);
  EXPECT_EQ(parse_listen("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_THROW(parse_listen("nohost"), ConfigError);
  EXPECT_THROW(parse_listen("h:99999"), ConfigError);
}

TEST(Latency, NearestRankPercentiles) {
  std::vector<double> samples;
  for (int i = 1; i <= 100; ++i) samples.push_back(i);
  const auto s = latency_summary(samples);
  EXPECT_EQ(s.p50_ms, 50);
  EXPECT_EQ(s.p95_ms, 95);
  EXPECT_EQ(s.p99_ms, 99);
  EXPECT_EQ(s.max_ms, 100);
}
