#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "hgunet/ingest/flow_record.hpp"
#include "hgunet/ingest/schema.hpp"

namespace hgunet::ingest {

struct ParseOptions {
  LabelPolicy label_policy = LabelPolicy::BinarySuspiciousAsAttack;
  /// Replacement for ±Inf cells. Unset: column's finite max ×10 (min ×10 for −Inf).
  std::optional<double> inf_cap;
  double nan_value = 0.0;
  bool suppress_duplicates = true;
  /// Prefix for generated flow ids when the schema has no id column.
  std::string id_prefix;
};

struct ParseStats {
  std::size_t total_rows = 0;
  std::size_t emitted = 0;
  std::size_t skipped_malformed = 0;
  std::size_t skipped_label_policy = 0;
  std::size_t suppressed_duplicates = 0;
  std::size_t inf_replaced = 0;
  std::size_t nan_replaced = 0;

  std::size_t skipped() const { return skipped_malformed + skipped_label_policy; }
};

struct ParseResult {
  FlowTable table;
  ParseStats stats;
};

ParseResult parse_flow_stream(std::istream& in, const FeatureSchema& schema,
                              const ParseOptions& opts = {});
ParseResult parse_flow_file(const std::filesystem::path& path, const FeatureSchema& schema,
                            const ParseOptions& opts = {});

/// Epoch microseconds from "YYYY-MM-DD HH:MM:SS[.ffffff]", "M/D/YYYY H:MM[:SS] [AM|PM]",
/// or a plain number (seconds if < 1e11, milliseconds if < 1e14, else microseconds).
std::optional<std::int64_t> parse_timestamp(std::string_view text);

}  // namespace hgunet::ingest
