#include "hgunet/train/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hgunet/error.hpp"
#include "hgunet/numeric/rng.hpp"

namespace hgunet::train {

namespace {

const std::vector<std::string> kNames = {
    "ack_flag_count", "init_win_bytes_fwd", "min_seg_size_fwd", "fwd_iat_mean", "fwd_iat_max", "flow_iat_mean",
    "flow_iat_max",   "fwd_pkt_len_std",    "flow_duration",    "fwd_pkt_len_mean", "total_fwd_packets"};

// Per-feature latent shift (in units of `separation`) for attack flows.
constexpr double kShift[] = {-0.25, -0.25, 0.0, -1.0, -1.0, -1.0, -1.0, -1.0, -0.5, -0.5, 0.25};

std::string ip(const char* prefix, std::size_t n) {
  return std::string(prefix) + std::to_string(n / 250) + "." + std::to_string(n % 250 + 1);
}

std::vector<double> draw_features(nn::RngStream& rng, bool attack, double separation) {
  double z[11];
  for (std::size_t i = 0; i < 11; ++i) z[i] = rng.normal() + (attack ? kShift[i] * separation : 0.0);
  return {
      z[0] > 0.0 ? 1.0 : 0.0,
      std::round(std::max(0.0, 8192.0 + 3000.0 * z[1])),
      20.0 + 4.0 * std::round(std::clamp(z[2] + 1.0, 0.0, 3.0)),
      std::exp(9.0 + 0.8 * z[3]),
      std::exp(10.0 + 0.8 * z[4]),
      std::exp(8.5 + 0.8 * z[5]),
      std::exp(9.5 + 0.8 * z[6]),
      std::max(0.0, 120.0 + 60.0 * z[7]),
      std::exp(12.0 + 1.0 * z[8]),
      std::max(0.0, 400.0 + 150.0 * z[9]),
      std::max(1.0, std::round(10.0 + 4.0 * z[10])),
  };
}

}  // namespace

void SyntheticConfig::validate() const {
  if (flows == 0 || flows_per_slot == 0) throw ConfigError("synthetic: flow counts must be positive");
  if (min_attack_fan_in == 0 || min_attack_fan_in > max_attack_fan_in) {
    throw ConfigError("synthetic: attack fan-in range is empty");
  }
  if (max_benign_fan_in == 0) throw ConfigError("synthetic: benign fan-in must be positive");
  if (!(slot_active_s > 0.0 && slot_active_s < slot_period_s)) {
    throw ConfigError("synthetic: active span must be shorter than the slot period");
  }
}

ingest::FlowTable generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  nn::RngStream rng(cfg.seed);
  ingest::FlowTable table;
  table.feature_names = kNames;

  std::size_t next_spoof = 0;
  std::size_t slot = 0;
  while (table.records.size() < cfg.flows) {
    std::vector<ingest::FlowRecord> burst;
    const std::size_t budget = std::min(cfg.flows_per_slot, cfg.flows - table.records.size());
    const auto add = [&](std::string src, std::string dst, std::uint16_t dport, bool attack) {
      ingest::FlowRecord r;
      r.src_ip = std::move(src);
      r.dst_ip = std::move(dst);
      r.src_port = static_cast<std::uint16_t>(1024 + rng.below(60000));
      r.dst_port = dport;
      r.protocol = 6;
      r.features = draw_features(rng, attack, cfg.separation);
      r.label = attack ? ingest::Label::Attack : ingest::Label::Benign;
      burst.push_back(std::move(r));
    };

    for (std::size_t a = 0; a < cfg.attack_bursts_per_slot && burst.size() < budget; ++a) {
      const std::string victim = ip("10.1.", rng.below(40));
      const std::size_t fan_in = cfg.min_attack_fan_in + rng.below(cfg.max_attack_fan_in - cfg.min_attack_fan_in + 1);
      for (std::size_t i = 0; i < fan_in && burst.size() < budget; ++i) add(ip("198.18.", next_spoof++ % 60000), victim, 80, true);
    }
    // Benign servers are drawn without replacement inside a slot so no
    // server exceeds the benign fan-in.
    std::vector<std::size_t> servers(400);
    for (std::size_t i = 0; i < servers.size(); ++i) servers[i] = i;
    rng.shuffle(std::span<std::size_t>(servers));
    std::size_t next_server = 0;
    while (burst.size() < budget) {
      const std::string server = ip("172.16.", servers[next_server++ % servers.size()]);
      const std::size_t n = 1 + rng.below(cfg.max_benign_fan_in);
      for (std::size_t i = 0; i < n && burst.size() < budget; ++i) {
        add(ip("192.168.", rng.below(1000)), server, rng.bernoulli(0.7) ? 443 : 80, false);
      }
    }

    const double slot_start = static_cast<double>(cfg.start_epoch_s) + static_cast<double>(slot) * cfg.slot_period_s;
    for (auto& r : burst) {
      r.timestamp_us = static_cast<std::int64_t>(std::llround((slot_start + rng.uniform() * cfg.slot_active_s) * 1e6));
    }
    std::stable_sort(burst.begin(), burst.end(),
                     [](const auto& a, const auto& b) { return a.timestamp_us < b.timestamp_us; });
    for (auto& r : burst) {
      r.flow_id = "syn-" + std::to_string(table.records.size());
      table.records.push_back(std::move(r));
    }
    ++slot;
  }
  return table;
}

void write_synthetic_csv(const std::filesystem::path& path, const ingest::FlowTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "flow_id,src_ip,dst_ip,src_port,dst_port,protocol,timestamp";
  for (const auto& n : table.feature_names) out << ',' << n;
  out << ",label\n";
  char buf[32];
  for (const auto& r : table.records) {
    out << r.flow_id << ',' << r.src_ip << ',' << r.dst_ip << ',' << r.src_port << ',' << r.dst_port << ','
        << static_cast<int>(r.protocol) << ',' << r.timestamp_us;
    for (double v : r.features) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << ',' << ingest::to_string(r.label) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace hgunet::train
