#include "hgunet/ingest/flow_record.hpp"

#include <unordered_map>

#include "hgunet/error.hpp"

namespace hgunet::ingest {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::Attack: return "attack";
    case Label::Suspicious: return "suspicious";
    case Label::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label label_from_string(std::string_view s) {
  if (s == "benign") return Label::Benign;
  if (s == "attack") return Label::Attack;
  if (s == "suspicious") return Label::Suspicious;
  if (s == "unlabeled") return Label::Unlabeled;
  throw DataError("unknown canonical label '" + std::string(s) + "'");
}

std::string_view to_string(LabelPolicy policy) {
  switch (policy) {
    case LabelPolicy::BinarySuspiciousAsAttack: return "binary_suspicious_as_attack";
    case LabelPolicy::BinarySuspiciousAsBenign: return "binary_suspicious_as_benign";
    case LabelPolicy::DropSuspicious: return "drop_suspicious";
    case LabelPolicy::ThreeClassPassthrough: return "three_class_passthrough";
  }
  return "binary_suspicious_as_attack";
}

LabelPolicy label_policy_from_string(std::string_view s) {
  if (s == "binary_suspicious_as_attack") return LabelPolicy::BinarySuspiciousAsAttack;
  if (s == "binary_suspicious_as_benign") return LabelPolicy::BinarySuspiciousAsBenign;
  if (s == "drop_suspicious") return LabelPolicy::DropSuspicious;
  if (s == "three_class_passthrough") return LabelPolicy::ThreeClassPassthrough;
  throw ConfigError("unknown label policy '" + std::string(s) + "'");
}

std::optional<Label> apply_label_policy(Label canonical, LabelPolicy policy) {
  if (canonical != Label::Suspicious) return canonical;
  switch (policy) {
    case LabelPolicy::BinarySuspiciousAsAttack: return Label::Attack;
    case LabelPolicy::BinarySuspiciousAsBenign: return Label::Benign;
    case LabelPolicy::DropSuspicious: return std::nullopt;
    case LabelPolicy::ThreeClassPassthrough: return Label::Suspicious;
  }
  return canonical;
}

int binary_target(Label label) {
  switch (label) {
    case Label::Benign: return 0;
    case Label::Attack: return 1;
    default: return -1;
  }
}

FlowRecord select_features(const FlowRecord& record, const std::vector<std::string>& names,
                           const std::vector<std::string>& subset) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < names.size(); ++i) pos.emplace(names[i], i);
  FlowRecord out = record;
  out.features.clear();
  out.features.reserve(subset.size());
  for (const auto& name : subset) {
    auto it = pos.find(name);
    if (it == pos.end()) throw ConfigError("unknown feature '" + name + "'");
    out.features.push_back(record.features.at(it->second));
  }
  return out;
}

FlowTable select_features(const FlowTable& table, const std::vector<std::string>& subset) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < table.feature_names.size(); ++i) pos.emplace(table.feature_names[i], i);
  std::vector<std::size_t> idx;
  idx.reserve(subset.size());
  for (const auto& name : subset) {
    auto it = pos.find(name);
    if (it == pos.end()) throw ConfigError("unknown feature '" + name + "'");
    idx.push_back(it->second);
  }
  FlowTable out;
  out.feature_names = subset;
  out.records.reserve(table.records.size());
  for (const auto& r : table.records) {
    FlowRecord s = r;
    s.features.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) s.features[i] = r.features[idx[i]];
    out.records.push_back(std::move(s));
  }
  return out;
}

}  // namespace hgunet::ingest
