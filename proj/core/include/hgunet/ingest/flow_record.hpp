#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hgunet::ingest {

enum class Label { Benign, Attack, Suspicious, Unlabeled };

std::string_view to_string(Label label);
Label label_from_string(std::string_view s);

/// How a three-valued source label lands in the model's label space.
enum class LabelPolicy {
  BinarySuspiciousAsAttack,
  BinarySuspiciousAsBenign,
  DropSuspicious,
  ThreeClassPassthrough,
};

std::string_view to_string(LabelPolicy policy);
LabelPolicy label_policy_from_string(std::string_view s);

/// Apply the policy to a canonical label. nullopt means "exclude the record".
std::optional<Label> apply_label_policy(Label canonical, LabelPolicy policy);

/// Binary training target: 1 attack, 0 benign, -1 no target.
int binary_target(Label label);

struct FlowRecord {
  std::string flow_id;
  std::string src_ip;
  std::string dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;
  std::int64_t timestamp_us = 0;  // epoch microseconds, > 0
  std::vector<double> features;
  Label label = Label::Unlabeled;

  bool operator==(const FlowRecord&) const = default;
};

/// Records plus the canonical names of their feature columns.
struct FlowTable {
  std::vector<std::string> feature_names;
  std::vector<FlowRecord> records;
};

/// Reduce/reorder features to `subset` (canonical names, in that order).
FlowRecord select_features(const FlowRecord& record, const std::vector<std::string>& names,
                           const std::vector<std::string>& subset);
FlowTable select_features(const FlowTable& table, const std::vector<std::string>& subset);

}  // namespace hgunet::ingest
