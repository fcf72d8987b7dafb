#pragma once

#include <cstdint>
#include <filesystem>

#include "hgunet/ingest/flow_record.hpp"

namespace hgunet::train {

/// Labeled corpus with a known separation. Traffic comes in bursts every
/// `slot_period_s`; each burst holds benign client→server flows (every
/// server receiving 1..max_benign_fan_in of them) plus attack bursts where
/// many spoofed sources hit one victim (min_attack_fan_in..max_attack_fan_in
/// flows). Attack flows have their IAT and packet-length features shifted by
/// `separation` standard deviations.
struct SyntheticConfig {
  std::size_t flows = 5000;
  std::size_t flows_per_slot = 100;
  std::size_t attack_bursts_per_slot = 1;
  std::size_t min_attack_fan_in = 20;
  std::size_t max_attack_fan_in = 40;
  std::size_t max_benign_fan_in = 3;
  double separation = 2.0;
  double slot_period_s = 20.0;
  double slot_active_s = 5.0;
  std::int64_t start_epoch_s = 1700000000;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Feature names match the bundled "synthetic" schema. Records are in
/// timestamp order with flow ids "syn-<n>".
ingest::FlowTable generate_synthetic(const SyntheticConfig& cfg);

/// CSV in the "synthetic" schema layout (parses back to the same table).
void write_synthetic_csv(const std::filesystem::path& path, const ingest::FlowTable& table);

}  // namespace hgunet::train
