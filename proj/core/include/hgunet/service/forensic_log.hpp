#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace hgunet::service {

/// Append-only hash-chained JSONL log. Every line is exactly
///   {"body":<body>,"chain_hash":"<64 hex>"}
/// with chain_hash = sha256(previous chain_hash + body bytes) and the
/// genesis "previous" being 64 zeros. Line n carries body.seq == n; line 0 is
/// a header naming the hash algorithm.
class ForensicLog {
 public:
  /// Creates (truncates) the file and writes the header.
  ForensicLog(const std::filesystem::path& path, const nlohmann::ordered_json& header_fields);

  /// Stamps `seq` into the body and appends; returns the sequence number.
  std::uint64_t append(nlohmann::ordered_json body);
  void flush();

  std::uint64_t next_seq() const { return next_seq_; }
  const std::string& head() const { return prev_hash_; }

 private:
  void write(const nlohmann::ordered_json& body);

  std::ofstream out_;
  std::string prev_hash_;
  std::uint64_t next_seq_ = 0;
};

inline const std::string kGenesisHash(64, '0');

struct LogVerification {
  bool ok = true;
  std::uint64_t records = 0;                  // lines that verified
  std::optional<std::uint64_t> first_corrupt;  // sequence number of the first bad line
  std::string reason;
};

/// Recomputes the chain. A truncated or malformed line counts as corruption
/// at its sequence position. An empty file verifies.
LogVerification verify_forensic_log(const std::filesystem::path& path);
LogVerification verify_forensic_log(std::istream& in);

}  // namespace hgunet::service
