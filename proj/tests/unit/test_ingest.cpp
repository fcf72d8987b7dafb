#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hgunet/error.hpp"
#include "hgunet/ingest/export.hpp"
#include "hgunet/ingest/parser.hpp"
#include "hgunet/ingest/schema.hpp"
#include "hgunet/ingest/standardizer.hpp"
#include "hgunet/numeric/rng.hpp"

using namespace hgunet;
using namespace hgunet::ingest;

namespace {

// CICFlowMeter-style CSV: identity columns, every feature column, label.
// `overrides` replaces feature cells by canonical name.
struct CicRow {
  std::string src = "192.168.1.10", dst = "10.0.0.5";
  int sport = 5555, dport = 80, proto = 6;
  std::string ts = "2019-01-12 10:00:00";
  std::string label = "BENIGN";
  std::map<std::string, std::string> overrides;
  double base = 1.0;
};

std::string cic_csv(const FeatureSchema& s, const std::vector<CicRow>& rows) {
  std::ostringstream out;
  out << " Source IP, Destination IP, Source Port, Destination Port, Protocol, Timestamp";
  for (const auto& c : s.columns) out << ", " << c.source;
  out << ", Label\n";
  for (const auto& r : rows) {
    out << r.src << ',' << r.dst << ',' << r.sport << ',' << r.dport << ',' << r.proto << ',' << r.ts;
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
      auto it = r.overrides.find(s.columns[i].canonical);
      out << ',' << (it != r.overrides.end() ? it->second : std::to_string(r.base + static_cast<double>(i)));
    }
    out << ',' << r.label << '\n';
  }
  return out.str();
}

ParseResult parse_text(const std::string& text, const FeatureSchema& s, ParseOptions opts = {}) {
  std::istringstream in(text);
  return parse_flow_stream(in, s, opts);
}

}  // namespace

TEST(Schema, BundledSchemasLoadAndValidate) {
  for (const char* name : {"cicflowmeter", "ntlflowlyzer", "synthetic"}) {
    const auto s = resolve_schema(name);
    EXPECT_NO_THROW(s.validate()) << name;
    EXPECT_EQ(s.default_subset.size(), 8u) << name;
  }
  EXPECT_THROW(resolve_schema("no-such-schema"), SchemaError);
}

TEST(Schema, DefaultSubsetIsDescriptorListPlusWebIndicators) {
  const auto cic = resolve_schema("cicflowmeter");
  const std::vector<std::string> expected = {"ack_flag_count", "init_win_bytes_fwd", "min_seg_size_fwd",
                                             "fwd_iat_mean",   "fwd_iat_max",        "flow_iat_mean",
                                             "flow_iat_max",   "fwd_pkt_len_std"};
  EXPECT_EQ(cic.default_feature_subset(), expected);
  const auto ntl = resolve_schema("ntlflowlyzer");
  EXPECT_EQ(ntl.default_feature_subset().size(), 8 + ntl.web_ddos_indicators.size());
}

TEST(Parser, ThreeCleanRows) {
  const auto s = resolve_schema("cicflowmeter");
  std::vector<CicRow> rows(3);
  for (int i = 0; i < 3; ++i) rows[i].sport = 1000 + i;
  const auto r = parse_text(cic_csv(s, rows), s);
  EXPECT_EQ(r.table.records.size(), 3u);
  EXPECT_EQ(r.stats.skipped(), 0u);
  EXPECT_EQ(r.stats.suppressed_duplicates, 0u);
  EXPECT_EQ(r.table.feature_names.size(), s.columns.size());
  EXPECT_EQ(r.table.records[1].src_port, 1001);
  EXPECT_EQ(r.table.records[0].label, Label::Benign);
}

TEST(Parser, InfinityReplacedByCapAndCounted) {
  const auto s = resolve_schema("cicflowmeter");
  std::vector<CicRow> rows(3);
  for (int i = 0; i < 3; ++i) rows[i].sport = 1000 + i;
  rows[1].overrides["flow_bytes_per_s"] = "Infinity";
  rows[2].overrides["flow_packets_per_s"] = "NaN";

  ParseOptions capped;
  capped.inf_cap = 1e9;
  const auto r = parse_text(cic_csv(s, rows), s, capped);
  ASSERT_EQ(r.table.records.size(), 3u);
  EXPECT_EQ(r.stats.inf_replaced, 1u);
  EXPECT_EQ(r.stats.nan_replaced, 1u);
  const auto names = r.table.feature_names;
  const auto col = std::find(names.begin(), names.end(), "flow_bytes_per_s") - names.begin();
  EXPECT_EQ(r.table.records[1].features[col], 1e9);

  // Default cap: the column's finite max ×10.
  const auto d = parse_text(cic_csv(s, rows), s);
  EXPECT_EQ(d.table.records[1].features[col], 10.0 * r.table.records[0].features[col]);
}

TEST(Parser, DuplicateRowSuppressed) {
  const auto s = resolve_schema("cicflowmeter");
  const std::vector<CicRow> rows(2);
  const auto r = parse_text(cic_csv(s, rows), s);
  EXPECT_EQ(r.table.records.size(), 1u);
  EXPECT_EQ(r.stats.suppressed_duplicates, 1u);
}

TEST(Parser, CountersAlwaysBalance) {
  const auto s = resolve_schema("cicflowmeter");
  std::vector<CicRow> rows(6);
  for (int i = 0; i < 6; ++i) rows[i].sport = 2000 + i;
  rows[1].overrides["flow_duration"] = "abc";
  rows[2].sport = 70000;
  rows[3] = rows[0];
  rows[4].label = "Suspicious-not-mapped";
  std::string text = cic_csv(s, rows);
  text += "1.2.3.4,5.6.7.8,1,2\n";  // short row
  EXPECT_THROW(parse_text(text, s), DataError);  // unknown label string is an error

  rows[4].label = "DDoS";
  const auto r = parse_text(cic_csv(s, rows) + "1.2.3.4,5.6.7.8,1,2\n", s);
  EXPECT_EQ(r.stats.total_rows, 7u);
  EXPECT_EQ(r.stats.skipped_malformed, 3u);
  EXPECT_EQ(r.stats.suppressed_duplicates, 1u);
  EXPECT_EQ(r.stats.skipped() + r.stats.suppressed_duplicates + r.stats.emitted, r.stats.total_rows);
}

TEST(Parser, MissingColumnNamesIt) {
  const auto s = resolve_schema("cicflowmeter");
  std::string text = cic_csv(s, std::vector<CicRow>(1));
  const auto pos = text.find("Flow Duration");
  text.replace(pos, 13, "Flow Durat1on");
  try {
    parse_text(text, s);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("Flow Duration"), std::string::npos);
  }
}

TEST(Parser, ParsingIsIdempotent) {
  const auto s = resolve_schema("cicflowmeter");
  std::vector<CicRow> rows(5);
  for (int i = 0; i < 5; ++i) {
    rows[i].sport = 3000 + i;
    rows[i].base = 0.5 * i;
  }
  const auto text = cic_csv(s, rows);
  EXPECT_EQ(parse_text(text, s).table.records, parse_text(text, s).table.records);
}

TEST(Parser, Timestamps) {
  EXPECT_EQ(parse_timestamp("1970-01-01 00:00:01"), 1'000'000);
  EXPECT_EQ(parse_timestamp("1970-01-01 00:00:01.5"), 1'500'000);
  EXPECT_EQ(parse_timestamp("1/1/1970 12:00:01 AM"), 1'000'000);
  EXPECT_EQ(parse_timestamp("1700000000"), 1'700'000'000'000'000);
  EXPECT_EQ(parse_timestamp("1700000000000"), 1'700'000'000'000'000);
  EXPECT_FALSE(parse_timestamp("yesterday"));
}

TEST(Labels, BenignUnderEveryPolicy) {
  const auto s = resolve_schema("ntlflowlyzer");
  for (auto policy : {LabelPolicy::BinarySuspiciousAsAttack, LabelPolicy::BinarySuspiciousAsBenign,
                      LabelPolicy::DropSuspicious, LabelPolicy::ThreeClassPassthrough}) {
    EXPECT_EQ(map_label(s, "BENIGN", policy), Label::Benign);
  }
}

TEST(Labels, SuspiciousPolicies) {
  const auto s = resolve_schema("ntlflowlyzer");
  EXPECT_EQ(map_label(s, "Suspicious", LabelPolicy::DropSuspicious), std::nullopt);
  EXPECT_EQ(map_label(s, "Suspicious", LabelPolicy::BinarySuspiciousAsAttack), Label::Attack);
  EXPECT_EQ(map_label(s, "Suspicious", LabelPolicy::BinarySuspiciousAsBenign), Label::Benign);
  EXPECT_EQ(map_label(s, "Suspicious", LabelPolicy::ThreeClassPassthrough), Label::Suspicious);
  EXPECT_EQ(map_label(s, "DDoS-UDP", LabelPolicy::ThreeClassPassthrough), Label::Attack);
  EXPECT_THROW(map_label(resolve_schema("cicflowmeter"), "Mystery", LabelPolicy::DropSuspicious), DataError);
}

TEST(SelectFeatures, IdentityAndProjection) {
  FlowRecord r;
  r.features = {1, 2, 3, 4};
  const std::vector<std::string> names = {"a", "b", "c", "d"};
  EXPECT_EQ(select_features(r, names, names).features, r.features);
  const auto sub = select_features(r, names, {"d", "b"});
  EXPECT_EQ(sub.features, (std::vector<double>{4, 2}));
  EXPECT_THROW(select_features(r, names, {"zz"}), ConfigError);
}

TEST(SelectFeatures, CommutesWithStandardization) {
  nn::RngStream rng(21);
  FlowTable t;
  t.feature_names = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 30; ++i) {
    FlowRecord r;
    for (int f = 0; f < 5; ++f) r.features.push_back(rng.normal(f, 1.0 + f));
    t.records.push_back(r);
  }
  const std::vector<std::string> subset = {"e", "a", "c"};
  const auto s_full = fit_standardizer(t);
  const auto sel = select_features(t, subset);
  const auto s_sub = fit_standardizer(sel);
  for (const auto& r : t.records) {
    const auto a = select_features(apply_standardizer(r, s_full), s_full.output_names, subset).features;
    const auto b = apply_standardizer(select_features(r, t.feature_names, subset), s_sub).features;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Standardizer, TwoPointCase) {
  FlowTable t;
  t.feature_names = {"x"};
  t.records.resize(2);
  t.records[0].features = {1.0};
  t.records[1].features = {3.0};
  const auto s = fit_standardizer(t);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
  EXPECT_DOUBLE_EQ(s.transform({1.0})[0], -1.0);
  EXPECT_DOUBLE_EQ(s.transform({3.0})[0], 1.0);
}

TEST(Standardizer, FitSetHasZeroMeanAndConstantsDropped) {
  nn::RngStream rng(22);
  FlowTable t;
  t.feature_names = {"a", "constant", "b"};
  for (int i = 0; i < 50; ++i) {
    FlowRecord r;
    r.features = {rng.normal(5, 3), 7.0, rng.uniform(0, 1e6)};
    t.records.push_back(r);
  }
  const auto s = fit_standardizer(t);
  EXPECT_EQ(s.dropped, std::vector<std::string>{"constant"});
  EXPECT_EQ(s.output_width(), 2u);
  const auto z = apply_standardizer(t, s);
  for (std::size_t f = 0; f < 2; ++f) {
    double m = 0;
    for (const auto& r : z.records) m += r.features[f];
    EXPECT_LT(std::abs(m / 50), 1e-9);
  }

  const auto reloaded = nlohmann::json::parse(nlohmann::json(s).dump()).get<Standardizer>();
  for (const auto& r : t.records) EXPECT_EQ(reloaded.transform(r.features), s.transform(r.features));
}

TEST(Standardizer, NeedsTwoRecords) {
  FlowTable t;
  t.feature_names = {"x"};
  t.records.resize(1);
  t.records[0].features = {1.0};
  EXPECT_THROW(fit_standardizer(t), Error);
}

TEST(CanonicalExport, RoundTrip) {
  const auto s = resolve_schema("cicflowmeter");
  std::vector<CicRow> rows(4);
  for (int i = 0; i < 4; ++i) {
    rows[i].sport = 4000 + i;
    rows[i].base = 0.1 * i + 1e-7;
    rows[i].label = i % 2 ? "DDoS" : "BENIGN";
  }
  const auto table = parse_text(cic_csv(s, rows), s).table;
  std::stringstream buf;
  write_canonical_jsonl(buf, table);
  const auto back = read_canonical_jsonl(buf);
  EXPECT_EQ(back.feature_names, table.feature_names);
  EXPECT_EQ(back.records, table.records);
}
