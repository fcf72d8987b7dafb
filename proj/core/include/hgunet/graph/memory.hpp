#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hgunet/graph/window.hpp"

namespace hgunet::graph {

struct MemoryConfig {
  std::size_t per_host = 8;  // K
  std::size_t global = 4096; // G

  void validate() const;
};

struct MemoryEntry {
  std::string flow_id;
  std::string src_ip;
  std::string dst_ip;
  std::int64_t timestamp_us = 0;
  std::vector<double> features;
  int label = -1;
  std::uint64_t seq = 0;  // insertion order
};

/// Per-host rings of recent flows with a per-host cap K and a global cap G on
/// live ring entries. Eviction is oldest-first.
class SlidingWindowMemory {
 public:
  using EntryPtr = std::shared_ptr<const MemoryEntry>;
  using Ring = std::deque<EntryPtr>;

  explicit SlidingWindowMemory(MemoryConfig cfg = {});

  void update(const Batch& batch);
  /// Ring for a host, oldest first; empty when unknown.
  const Ring& ring(const std::string& host) const;
  /// Live ring entries across all hosts (a flow sits in up to two rings).
  std::size_t size() const { return live_; }
  std::size_t host_count() const { return rings_.size(); }
  const MemoryConfig& config() const { return cfg_; }

 private:
  void push(const std::string& host, const EntryPtr& entry);
  void evict_global();

  MemoryConfig cfg_;
  std::unordered_map<std::string, Ring> rings_;
  std::deque<std::pair<std::string, std::uint64_t>> order_;  // (host, seq), oldest first
  std::size_t live_ = 0;
  std::uint64_t next_seq_ = 0;
};

void to_json(nlohmann::json& j, const MemoryConfig& c);
void from_json(const nlohmann::json& j, MemoryConfig& c);

}  // namespace hgunet::graph
