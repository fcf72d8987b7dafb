#include "hgunet/graph/memory.hpp"

#include "hgunet/error.hpp"

namespace hgunet::graph {

void MemoryConfig::validate() const {
  if (per_host < 1) throw ConfigError("memory per-host cap must be >= 1");
  if (global < 1) throw ConfigError("memory global cap must be >= 1");
}

SlidingWindowMemory::SlidingWindowMemory(MemoryConfig cfg) : cfg_(cfg) { cfg_.validate(); }

const SlidingWindowMemory::Ring& SlidingWindowMemory::ring(const std::string& host) const {
  static const Ring kEmpty;
  auto it = rings_.find(host);
  return it == rings_.end() ? kEmpty : it->second;
}

void SlidingWindowMemory::push(const std::string& host, const EntryPtr& entry) {
  Ring& r = rings_[host];
  r.push_back(entry);
  order_.emplace_back(host, entry->seq);
  ++live_;
  while (r.size() > cfg_.per_host) {
    r.pop_front();
    --live_;
  }
}

void SlidingWindowMemory::evict_global() {
  while (live_ > cfg_.global && !order_.empty()) {
    auto [host, seq] = order_.front();
    order_.pop_front();
    auto it = rings_.find(host);
    if (it == rings_.end()) continue;
    Ring& r = it->second;
    // Stale order entries (already evicted per host) are simply skipped.
    if (!r.empty() && r.front()->seq == seq) {
      r.pop_front();
      --live_;
      if (r.empty()) rings_.erase(it);
    }
  }
  // Compact the order log when stale entries dominate.
  if (order_.size() > 4 * (live_ + 16)) {
    std::deque<std::pair<std::string, std::uint64_t>> fresh;
    for (auto& [host, seq] : order_) {
      auto it = rings_.find(host);
      if (it == rings_.end()) continue;
      for (const auto& e : it->second) {
        if (e->seq == seq) {
          fresh.emplace_back(host, seq);
          break;
        }
      }
    }
    order_ = std::move(fresh);
  }
}

void SlidingWindowMemory::update(const Batch& batch) {
  for (const auto& r : batch.records) {
    auto entry = std::make_shared<MemoryEntry>();
    entry->flow_id = r.flow_id;
    entry->src_ip = r.src_ip;
    entry->dst_ip = r.dst_ip;
    entry->timestamp_us = r.timestamp_us;
    entry->features = r.features;
    entry->label = ingest::binary_target(r.label);
    entry->seq = next_seq_++;
    EntryPtr shared = std::move(entry);
    push(r.src_ip, shared);
    if (r.dst_ip != r.src_ip) push(r.dst_ip, shared);
    evict_global();
  }
}

void to_json(nlohmann::json& j, const MemoryConfig& c) {
  j = {{"per_host", c.per_host}, {"global", c.global}};
}

void from_json(const nlohmann::json& j, MemoryConfig& c) {
  c.per_host = j.value("per_host", c.per_host);
  c.global = j.value("global", c.global);
}

}  // namespace hgunet::graph
