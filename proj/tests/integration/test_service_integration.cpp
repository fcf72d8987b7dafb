#include <algorithm>
#include <fstream>
#include <map>

#include <gtest/gtest.h>
#include <httplib.h>

#include "hgunet/ingest/export.hpp"
#include "hgunet/ingest/parser.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/service/alert_store.hpp"
#include "hgunet/service/api_server.hpp"
#include "hgunet/service/decision.hpp"
#include "hgunet/service/feedback_export.hpp"
#include "hgunet/service/forensic_log.hpp"
#include "hgunet/service/pipeline.hpp"
#include "testkit.hpp"

using namespace hgunet;
using namespace hgunet::service;

namespace {

std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& p) {
  std::vector<nlohmann::ordered_json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::ordered_json::parse(line));
  }
  return out;
}

// One fixture (trained bundle + stream) shared by the whole suite.
class ServiceIntegration : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testkit::TempDir("integration");
    fx_ = new testkit::ServiceFixture(testkit::make_service_fixture(dir_->path()));
  }
  static void TearDownTestSuite() {
    delete fx_;
    delete dir_;
  }
  static RunSummary replay(const std::filesystem::path& out, AlertStore* store = nullptr) {
    RunOptions o;
    o.input = fx_->stream_csv;
    o.out_dir = out;
    o.live_store = store;
    return run_pipeline(fx_->config, o);
  }

  static testkit::TempDir* dir_;
  static testkit::ServiceFixture* fx_;
};

testkit::TempDir* ServiceIntegration::dir_ = nullptr;
testkit::ServiceFixture* ServiceIntegration::fx_ = nullptr;

}  // namespace

TEST_F(ServiceIntegration, TierCountsMatchOfflineDecisions) {
  const auto out = dir_->path() / "run_tiers";
  const auto summary = replay(out);
  EXPECT_EQ(summary.flows_scored, 600u);
  EXPECT_EQ(summary.parse.emitted, 600u);

  const auto predictions = read_jsonl(out / "predictions.jsonl");
  ASSERT_EQ(predictions.size(), 600u);
  std::map<std::string, std::size_t> tiers;
  std::size_t grey = 0;
  for (const auto& p : predictions) {
    const auto d = decide(p["p"].get<double>(), fx_->config.thresholds);
    ++tiers[std::string(to_string(d.action))];
    grey += d.analyst_alert;
  }
  for (const auto& [tier, n] : summary.tiers) EXPECT_EQ(n, tiers[tier]) << tier;
  EXPECT_EQ(summary.grey_zone_alerts, grey);
  EXPECT_EQ(read_jsonl(out / "alerts.jsonl").size(), grey);
  EXPECT_EQ(read_jsonl(out / "flows.jsonl").size(), grey);

  const auto verdicts = read_jsonl(out / "verdicts.jsonl");
  ASSERT_EQ(verdicts.size(), predictions.size());
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    EXPECT_EQ(verdicts[i]["flow_id"], predictions[i]["flow_id"]);
  }

  const auto v = verify_forensic_log(out / "forensic.jsonl");
  EXPECT_TRUE(v.ok) << v.reason;
  EXPECT_EQ(v.records, 601u);
  const auto summary_json = nlohmann::json::parse(testkit::read_file(out / "summary.json"));
  EXPECT_EQ(summary_json["flows_scored"], 600);
  EXPECT_TRUE(summary_json["stages"].contains("inference"));
}

TEST_F(ServiceIntegration, EmptyInputGivesZeroCounts) {
  const auto empty = dir_->path() / "empty.csv";
  std::ofstream(empty).close();
  RunOptions o;
  o.input = empty;
  o.out_dir = dir_->path() / "run_empty";
  const auto s = run_pipeline(fx_->config, o);
  EXPECT_EQ(s.flows_scored, 0u);
  EXPECT_EQ(s.windows, 0u);
  for (const auto& [tier, n] : s.tiers) EXPECT_EQ(n, 0u) << tier;
  EXPECT_TRUE(verify_forensic_log(o.out_dir / "forensic.jsonl").ok);
}

TEST_F(ServiceIntegration, ReplayIsDeterministic) {
  replay(dir_->path() / "det_a");
  replay(dir_->path() / "det_b");
  for (const char* f : {"forensic.jsonl", "predictions.jsonl", "verdicts.jsonl", "alerts.jsonl", "flows.jsonl"}) {
    EXPECT_EQ(testkit::read_file(dir_->path() / "det_a" / f), testkit::read_file(dir_->path() / "det_b" / f)) << f;
  }
}

TEST_F(ServiceIntegration, LiveStoreAndHttpApi) {
  AlertStore store;
  const auto out = dir_->path() / "run_http";
  std::size_t windows_seen = 0;
  RunOptions o;
  o.input = fx_->stream_csv;
  o.out_dir = out;
  o.live_store = &store;
  o.on_window = [&](const WindowReport&) { ++windows_seen; };
  const auto summary = run_pipeline(fx_->config, o);
  EXPECT_EQ(windows_seen, summary.windows);
  ASSERT_EQ(store.size(), summary.grey_zone_alerts);
  ASSERT_GT(store.size(), 0u) << "fixture produced no grey-zone alerts";
  store.attach_feedback_log(out / "feedback.jsonl");

  ApiServer server(store);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto list = client.Get("/v1/alerts?page=1&page_size=5");
  ASSERT_TRUE(list);
  const auto lj = nlohmann::json::parse(list->body);
  EXPECT_EQ(lj["total"], store.size());
  const std::string id = lj["alerts"][0]["id"];

  auto detail = client.Get(("/v1/alerts/" + id).c_str());
  ASSERT_TRUE(detail);
  const auto dj = nlohmann::json::parse(detail->body);
  EXPECT_FALSE(dj["top_features"].empty());
  EXPECT_TRUE(dj["subgraph"].contains("nodes"));

  const std::string path = "/v1/alerts/" + id + "/feedback";
  auto first = client.Post(path.c_str(), R"({"action":"block","rationale":"syn burst","analyst":"kim"})",
                           "application/json");
  ASSERT_TRUE(first);
  EXPECT_EQ(first->status, 201);
  auto second = client.Post(path.c_str(), R"({"action":"approve","rationale":"no"})", "application/json");
  ASSERT_TRUE(second);
  EXPECT_EQ(second->status, 409);
  auto bad = client.Get("/v1/alerts?page_size=0");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto summary_resp = client.Get("/v1/summary");
  ASSERT_TRUE(summary_resp);
  EXPECT_EQ(nlohmann::json::parse(summary_resp->body)["flows_scored"], summary.flows_scored);
  server.stop();

  AlertStore reloaded;
  AlertStore::load_run(reloaded, out);
  EXPECT_EQ(reloaded.get(id)->verdict->action, AnalystAction::Block);
  EXPECT_EQ(reloaded.get(id)->amendments.size(), 1u);
}

TEST_F(ServiceIntegration, FeedbackExportRoundTrip) {
  AlertStore store;
  const auto out = dir_->path() / "run_export";
  replay(out, &store);
  store.attach_feedback_log(out / "feedback.jsonl");
  const auto alerts = store.page(1, kMaxPageSize);
  ASSERT_GE(alerts.size(), 3u) << "fixture needs three grey-zone alerts";

  const AnalystAction actions[] = {AnalystAction::Approve, AnalystAction::Block, AnalystAction::RateLimit};
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_EQ(store.submit(alerts[i].id, {"", "", actions[i], "reviewed", "kim", "t"}), FeedbackOutcome::Created);
  }
  // Amendment on the approved alert must not change its exported label.
  store.submit(alerts[0].id, {"", "", AnalystAction::Block, "second look", "kim", "t"});

  ExportStats stats;
  const auto table = collect_feedback(out, &stats);
  EXPECT_EQ(stats.exported, 2u);
  EXPECT_EQ(stats.excluded_rate_limit, 1u);
  EXPECT_EQ(stats.amendments_ignored, 1u);
  ASSERT_EQ(table.records.size(), 2u);
  EXPECT_EQ(table.records[0].flow_id, alerts[0].flow_id());
  EXPECT_EQ(table.records[0].label, ingest::Label::Benign);
  EXPECT_EQ(table.records[1].flow_id, alerts[1].flow_id());
  EXPECT_EQ(table.records[1].label, ingest::Label::Attack);

  // Exported records are the originals, relabelled and byte-stable.
  const auto originals = read_jsonl(out / "flows.jsonl");
  for (const auto& r : table.records) {
    const auto it = std::find_if(originals.begin(), originals.end(),
                                 [&](const nlohmann::ordered_json& j) { return j["flow_id"] == r.flow_id; });
    ASSERT_NE(it, originals.end());
    const auto original = ingest::record_from_json(*it);
    EXPECT_EQ(original.features, r.features);
    EXPECT_EQ(original.timestamp_us, r.timestamp_us);
    EXPECT_EQ(original.dst_ip, r.dst_ip);
  }
  const auto file = out / "export.jsonl";
  export_feedback(out, file);
  const auto reparsed = ingest::read_canonical_jsonl(file);
  ASSERT_EQ(reparsed.records.size(), table.records.size());
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    EXPECT_EQ(reparsed.records[i].features, table.records[i].features);
    EXPECT_EQ(reparsed.records[i].label, table.records[i].label);
    EXPECT_EQ(reparsed.records[i].src_ip, table.records[i].src_ip);
  }
  EXPECT_EQ(reparsed.feature_names, table.feature_names);
}
