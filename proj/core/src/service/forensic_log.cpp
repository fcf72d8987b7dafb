#include "hgunet/service/forensic_log.hpp"

#include "hgunet/error.hpp"
#include "hgunet/service/sha256.hpp"

namespace hgunet::service {

namespace {

constexpr std::string_view kPrefix = R"({"body":)";
constexpr std::string_view kHashKey = R"(,"chain_hash":")";
constexpr std::size_t kHexLen = 64;

bool is_hex(std::string_view s) {
  return s.find_first_not_of("0123456789abcdef") == std::string_view::npos;
}

}  // namespace

ForensicLog::ForensicLog(const std::filesystem::path& path, const nlohmann::ordered_json& header_fields)
    : out_(path, std::ios::binary | std::ios::trunc), prev_hash_(kGenesisHash) {
  if (!out_) throw IoError("cannot create forensic log " + path.string());
  nlohmann::ordered_json header;
  header["seq"] = 0;
  header["type"] = "header";
  header["hash_algorithm"] = kHashAlgorithm;
  header["chain"] = "sha256(prev_chain_hash_hex + body_bytes)";
  for (const auto& [k, v] : header_fields.items()) header[k] = v;
  write(header);
}

std::uint64_t ForensicLog::append(nlohmann::ordered_json body) {
  const std::uint64_t seq = next_seq_;
  nlohmann::ordered_json stamped;
  stamped["seq"] = seq;
  for (const auto& [k, v] : body.items()) {
    if (k != "seq") stamped[k] = v;
  }
  write(stamped);
  return seq;
}

void ForensicLog::write(const nlohmann::ordered_json& body) {
  const std::string bytes = body.dump();
  const std::string hash = sha256_hex(prev_hash_ + bytes);
  out_ << kPrefix << bytes << kHashKey << hash << "\"}\n";
  if (!out_) throw IoError("forensic log write failed");
  prev_hash_ = hash;
  ++next_seq_;
}

void ForensicLog::flush() { out_.flush(); }

LogVerification verify_forensic_log(std::istream& in) {
  LogVerification result;
  std::string prev = kGenesisHash;
  std::string line;
  std::uint64_t seq = 0;
  const auto fail = [&](std::string why) {
    result.ok = false;
    result.first_corrupt = seq;
    result.reason = std::move(why);
    return result;
  };
  while (true) {
    if (!std::getline(in, line)) break;
    if (in.eof()) return fail("truncated record (no line terminator)");
    const std::size_t suffix = kHashKey.size() + kHexLen + 2;
    if (line.size() < kPrefix.size() + suffix || line.compare(0, kPrefix.size(), kPrefix) != 0 ||
        line.compare(line.size() - suffix, kHashKey.size(), kHashKey) != 0 ||
        line.compare(line.size() - 2, 2, "\"}") != 0) {
      return fail("malformed record framing");
    }
    const std::string_view body(line.data() + kPrefix.size(), line.size() - kPrefix.size() - suffix);
    const std::string_view stored(line.data() + line.size() - kHexLen - 2, kHexLen);
    if (!is_hex(stored)) return fail("chain hash is not lowercase hex");
    const std::string expected = sha256_hex(prev + std::string(body));
    if (stored != expected) return fail("chain hash mismatch");
    nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) return fail("body is not a JSON object");
    const auto it = parsed.find("seq");
    if (it == parsed.end() || !it->is_number_unsigned() || it->get<std::uint64_t>() != seq) {
      return fail("sequence number out of order");
    }
    if (seq == 0 && parsed.value("hash_algorithm", "") != kHashAlgorithm) {
      return fail("header does not name the hash algorithm");
    }
    prev = expected;
    ++seq;
    ++result.records;
  }
  return result;
}

LogVerification verify_forensic_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read forensic log " + path.string());
  return verify_forensic_log(in);
}

}  // namespace hgunet::service
