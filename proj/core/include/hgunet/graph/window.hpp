#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/ingest/flow_record.hpp"

namespace hgunet::graph {

struct WindowConfig {
  double delta_t_s = 10.0;
  std::size_t max_flows = 512;
  /// Out-of-order records within this skew are accepted silently.
  double skew_s = 1.0;

  void validate() const;
};

enum class CloseReason { Size, Span, Flush };

struct Batch {
  std::uint64_t window_id = 0;
  std::vector<ingest::FlowRecord> records;
  std::int64_t start_us = 0;  // first record's timestamp
  std::int64_t end_us = 0;    // latest timestamp seen in the batch
  CloseReason reason = CloseReason::Flush;
};

/// Streaming Δt-or-B batcher. A batch closes when the next record would
/// stretch its span to ≥ Δt, or as soon as it holds B records.
class Windower {
 public:
  explicit Windower(WindowConfig cfg);

  /// Feed one record; returns any batches that closed (zero, one or two).
  std::vector<Batch> push(ingest::FlowRecord record);
  /// Close the partial batch at end of stream. Never returns an empty batch.
  std::optional<Batch> flush();

  std::size_t out_of_order() const { return out_of_order_; }
  std::size_t skew_violations() const { return skew_violations_; }

 private:
  Batch close(CloseReason reason);

  WindowConfig cfg_;
  std::int64_t delta_us_;
  std::int64_t skew_us_;
  Batch current_;
  std::uint64_t next_id_ = 0;
  std::size_t out_of_order_ = 0;
  std::size_t skew_violations_ = 0;
};

std::vector<Batch> window_batch(const std::vector<ingest::FlowRecord>& records,
                                const WindowConfig& cfg);

void to_json(nlohmann::json& j, const WindowConfig& c);
void from_json(const nlohmann::json& j, WindowConfig& c);

}  // namespace hgunet::graph
