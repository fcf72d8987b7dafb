#include "hgunet/ingest/parser.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "hgunet/error.hpp"

namespace hgunet::ingest {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// RFC-4180-ish split: commas, double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::optional<double> parse_number(std::string_view raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  const std::string l = lower(s);
  if (l == "inf" || l == "infinity" || l == "+inf" || l == "+infinity") {
    return std::numeric_limits<double>::infinity();
  }
  if (l == "-inf" || l == "-infinity") return -std::numeric_limits<double>::infinity();
  if (l == "nan" || l == "-nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view raw, long long lo, long long hi) {
  auto v = parse_number(raw);
  if (!v || !std::isfinite(*v) || *v != std::floor(*v)) return std::nullopt;
  if (*v < static_cast<double>(lo) || *v > static_cast<double>(hi)) return std::nullopt;
  return static_cast<long long>(*v);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return sys_days{year{y} / month{m} / day{d}}.time_since_epoch().count();
}

bool valid_date(int y, int m, int d) {
  using namespace std::chrono;
  return year_month_day{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}}.ok();
}

struct Cursor {
  std::string_view s;
  std::size_t i = 0;

  bool done() const { return i >= s.size(); }
  bool eat(char c) {
    if (!done() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  void skip_spaces() {
    while (!done() && s[i] == ' ') ++i;
  }
  std::optional<int> integer(std::size_t max_digits) {
    std::size_t start = i;
    int v = 0;
    while (!done() && i - start < max_digits && std::isdigit(static_cast<unsigned char>(s[i]))) {
      v = v * 10 + (s[i] - '0');
      ++i;
    }
    if (i == start) return std::nullopt;
    return v;
  }
};

std::optional<std::int64_t> parse_clock(Cursor& c, std::int64_t day_us) {
  auto hh = c.integer(2);
  if (!hh || !c.eat(':')) return std::nullopt;
  auto mm = c.integer(2);
  if (!mm) return std::nullopt;
  int ss = 0;
  std::int64_t frac_us = 0;
  if (c.eat(':')) {
    auto s = c.integer(2);
    if (!s) return std::nullopt;
    ss = *s;
    if (c.eat('.')) {
      std::size_t digits = 0;
      std::int64_t scale = 100000;
      while (!c.done() && std::isdigit(static_cast<unsigned char>(c.s[c.i]))) {
        if (digits < 6) {
          frac_us += (c.s[c.i] - '0') * scale;
          scale /= 10;
        }
        ++digits;
        ++c.i;
      }
    }
  }
  int hour = *hh;
  c.skip_spaces();
  if (!c.done()) {
    std::string rest = lower(std::string(c.s.substr(c.i)));
    if (rest == "pm") {
      if (hour < 12) hour += 12;
    } else if (rest == "am") {
      if (hour == 12) hour = 0;
    } else {
      return std::nullopt;
    }
    c.i = c.s.size();
  }
  if (hour > 23 || *mm > 59 || ss > 60) return std::nullopt;
  return day_us + ((hour * 60LL + *mm) * 60LL + ss) * 1000000LL + frac_us;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  if (t.find_first_not_of("0123456789.") == std::string::npos) {
    auto v = parse_number(t);
    if (!v) return std::nullopt;
    double us = *v;
    if (*v < 1e11) {
      us = *v * 1e6;
    } else if (*v < 1e14) {
      us = *v * 1e3;
    }
    return static_cast<std::int64_t>(std::llround(us));
  }
  Cursor c{t};
  auto a = c.integer(4);
  if (!a) return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (c.eat('-')) {
    // ISO: YYYY-MM-DD
    auto mm = c.integer(2);
    if (!mm || !c.eat('-')) return std::nullopt;
    auto dd = c.integer(2);
    if (!dd) return std::nullopt;
    y = *a;
    m = *mm;
    d = *dd;
  } else if (c.eat('/')) {
    // CICFlowMeter: D/M/YYYY (day first, as in the CIC-IDS2017 captures)
    auto b = c.integer(2);
    if (!b || !c.eat('/')) return std::nullopt;
    auto yy = c.integer(4);
    if (!yy) return std::nullopt;
    d = *a;
    m = *b;
    y = *yy;
    if (m > 12 && d <= 12) std::swap(d, m);
  } else {
    return std::nullopt;
  }
  if (!valid_date(y, m, d)) return std::nullopt;
  const std::int64_t day_us = days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d)) *
                              86400LL * 1000000LL;
  if (c.done()) return day_us;
  if (!c.eat(' ') && !c.eat('T')) return std::nullopt;
  c.skip_spaces();
  return parse_clock(c, day_us);
}

ParseResult parse_flow_stream(std::istream& in, const FeatureSchema& schema,
                              const ParseOptions& opts) {
  ParseResult result;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("flow file is empty (no header row)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

  const auto header = split_csv(line);
  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < header.size(); ++i) by_name.try_emplace(lower(trim(header[i])), i);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = by_name.find(lower(trim(name)));
    if (it == by_name.end()) {
      throw SchemaError("schema " + schema.name + ": column '" + name + "' missing from header");
    }
    return it->second;
  };

  std::optional<std::size_t> id_col;
  if (schema.flow_id_column) id_col = column(*schema.flow_id_column);
  const std::size_t src_ip = column(schema.src_ip_column);
  const std::size_t dst_ip = column(schema.dst_ip_column);
  const std::size_t src_port = column(schema.src_port_column);
  const std::size_t dst_port = column(schema.dst_port_column);
  const std::size_t proto = column(schema.protocol_column);
  const std::size_t ts = column(schema.timestamp_column);
  const std::size_t label_col = column(schema.label_column);
  std::vector<std::size_t> feature_cols;
  for (const auto& c : schema.columns) feature_cols.push_back(column(c.source));

  result.table.feature_names = schema.canonical_names();
  const std::size_t width = feature_cols.size();
  std::unordered_set<std::string> dedup;
  std::unordered_map<std::string, std::optional<Label>> label_memo;
  std::unordered_map<std::string, std::size_t> id_seen;
  std::size_t row_no = 0;

  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_no;
    ++result.stats.total_rows;
    const auto fields = split_csv(line);
    if (fields.size() < header.size()) {
      ++result.stats.skipped_malformed;
      continue;
    }
    FlowRecord r;
    r.src_ip = trim(fields[src_ip]);
    r.dst_ip = trim(fields[dst_ip]);
    auto sp = parse_integer(fields[src_port], 0, 65535);
    auto dp = parse_integer(fields[dst_port], 0, 65535);
    auto pr = parse_integer(fields[proto], 0, 255);
    auto t = parse_timestamp(fields[ts]);
    if (r.src_ip.empty() || r.dst_ip.empty() || !sp || !dp || !pr || !t || *t <= 0) {
      ++result.stats.skipped_malformed;
      continue;
    }
    r.src_port = static_cast<std::uint16_t>(*sp);
    r.dst_port = static_cast<std::uint16_t>(*dp);
    r.protocol = static_cast<std::uint8_t>(*pr);
    r.timestamp_us = *t;
    r.features.resize(width);
    bool ok = true;
    for (std::size_t f = 0; f < width && ok; ++f) {
      auto v = parse_number(fields[feature_cols[f]]);
      if (!v) ok = false;
      else r.features[f] = *v;
    }
    if (!ok) {
      ++result.stats.skipped_malformed;
      continue;
    }

    const std::string source_label = trim(fields[label_col]);
    auto memo = label_memo.find(source_label);
    if (memo == label_memo.end()) {
      memo = label_memo.emplace(source_label, map_label(schema, source_label, opts.label_policy)).first;
    }
    if (!memo->second) {
      ++result.stats.skipped_label_policy;
      continue;
    }
    r.label = *memo->second;

    if (opts.suppress_duplicates) {
      std::string key = r.src_ip + '|' + r.dst_ip + '|' + std::to_string(r.src_port) + '|' +
                        std::to_string(r.dst_port) + '|' + std::to_string(r.protocol) + '|' +
                        std::to_string(r.timestamp_us) + '|';
      key.append(reinterpret_cast<const char*>(r.features.data()), width * sizeof(double));
      if (!dedup.insert(std::move(key)).second) {
        ++result.stats.suppressed_duplicates;
        continue;
      }
    }

    std::string id = id_col ? trim(fields[*id_col]) : std::string();
    if (id.empty()) id = opts.id_prefix + std::to_string(row_no);
    if (auto [it, fresh] = id_seen.try_emplace(id, 0); !fresh) {
      id += "#" + std::to_string(++it->second);
    }
    r.flow_id = std::move(id);
    result.table.records.push_back(std::move(r));
  }

  // Inf/NaN replacement, using each column's observed finite range.
  auto& records = result.table.records;
  for (std::size_t f = 0; f < width; ++f) {
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      const double v = r.features[f];
      if (std::isfinite(v)) {
        mx = std::max(mx, v);
        mn = std::min(mn, v);
      }
    }
    const double pos_cap = opts.inf_cap ? *opts.inf_cap : (std::isfinite(mx) ? mx * 10.0 : 0.0);
    const double neg_cap = opts.inf_cap ? -*opts.inf_cap : (std::isfinite(mn) ? mn * 10.0 : 0.0);
    for (auto& r : records) {
      double& v = r.features[f];
      if (std::isnan(v)) {
        v = opts.nan_value;
        ++result.stats.nan_replaced;
      } else if (std::isinf(v)) {
        v = v > 0 ? pos_cap : neg_cap;
        ++result.stats.inf_replaced;
      }
    }
  }
  result.stats.emitted = records.size();
  return result;
}

ParseResult parse_flow_file(const std::filesystem::path& path, const FeatureSchema& schema,
                            const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read flow file " + path.string());
  ParseOptions o = opts;
  if (o.id_prefix.empty()) o.id_prefix = path.stem().string() + ":";
  return parse_flow_stream(in, schema, o);
}

}  // namespace hgunet::ingest
