#pragma once

#include <filesystem>

#include "hgunet/ingest/flow_record.hpp"

namespace hgunet::service {

struct ExportStats {
  std::size_t exported = 0;
  std::size_t excluded_rate_limit = 0;
  std::size_t skipped_missing = 0;  // feedback whose original record is gone
  std::size_t amendments_ignored = 0;
};

/// Join a run's first verdicts with its archived original records:
/// approve → benign, block → attack, rate_limit → excluded. The table is in
/// feedback order, ready for write_canonical_jsonl.
ingest::FlowTable collect_feedback(const std::filesystem::path& run_dir, ExportStats* stats = nullptr);

/// collect_feedback + write_canonical_jsonl to `out`.
ExportStats export_feedback(const std::filesystem::path& run_dir, const std::filesystem::path& out);

}  // namespace hgunet::service
