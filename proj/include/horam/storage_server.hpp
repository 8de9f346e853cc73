#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hash.hpp"
#include "trace.hpp"

namespace horam {

using Blob = std::vector<std::uint8_t>;

/// Probabilistic encryption of fixed-length plaintexts: a keyed keystream
/// XOR under a fresh 96-bit nonce stored in front of the ciphertext.
class CipherBox {
 public:
  static constexpr std::size_t kNonceBytes = 12;

  CipherBox(std::uint64_t master_seed, std::size_t plain_len)
      : key_(mix64(master_seed ^ 0x6a09e667f3bcc908ULL)), plain_len_(plain_len), nonces_(master_seed) {}

  std::size_t plain_len() const { return plain_len_; }
  std::size_t blob_len() const { return kNonceBytes + plain_len_; }

  void encrypt_into(std::span<const std::uint8_t> plain, std::span<std::uint8_t> blob) {
    if (plain.size() != plain_len_ || blob.size() != blob_len()) throw ParameterError("cipher length mismatch");
    const std::uint64_t lo = nonces_();
    const auto hi = static_cast<std::uint32_t>(nonces_());
    std::memcpy(blob.data(), &lo, 8);
    std::memcpy(blob.data() + 8, &hi, 4);
    apply(lo, hi, plain.data(), blob.data() + kNonceBytes);
  }

  Blob encrypt(std::span<const std::uint8_t> plain) {
    Blob b(blob_len());
    encrypt_into(plain, b);
    return b;
  }

  void decrypt_into(std::span<const std::uint8_t> blob, std::span<std::uint8_t> plain) const {
    if (plain.size() != plain_len_ || blob.size() != blob_len()) throw ParameterError("cipher length mismatch");
    std::uint64_t lo;
    std::uint32_t hi;
    std::memcpy(&lo, blob.data(), 8);
    std::memcpy(&hi, blob.data() + 8, 4);
    apply(lo, hi, blob.data() + kNonceBytes, plain.data());
  }

  std::vector<std::uint8_t> decrypt(std::span<const std::uint8_t> blob) const {
    std::vector<std::uint8_t> p(plain_len_);
    decrypt_into(blob, p);
    return p;
  }

 private:
  void apply(std::uint64_t lo, std::uint32_t hi, const std::uint8_t* in, std::uint8_t* out) const {
    const std::uint64_t k = keyed_prf(key_, lo) ^ mix64(hi + key_);
    for (std::size_t off = 0; off < plain_len_; off += 8) {
      const std::uint64_t ks = keyed_prf(k, off);
      const std::size_t len = std::min<std::size_t>(8, plain_len_ - off);
      for (std::size_t b = 0; b < len; ++b) out[off + b] = in[off + b] ^ static_cast<std::uint8_t>(ks >> (8 * b));
    }
  }

  std::uint64_t key_;
  std::size_t plain_len_;
  std::mt19937_64 nonces_;
};

/// One server-visible touch.
struct TraceRecord {
  std::uint64_t seq = 0;
  std::int32_t level = 0;
  std::uint64_t index = 0;
  TouchKind kind = TouchKind::Read;
  bool operator==(const TraceRecord&) const = default;
};

/// Honest-but-curious storage: named arrays of equal-length opaque blobs.
/// Every cell read or write is appended to the access log; contents are
/// never logged. Scratch arrays used during rebuilds are accounted with
/// note(), which logs a touch without storing anything.
class ServerStore {
 public:
  explicit ServerStore(std::size_t blob_len, TraceMode mode = TraceMode::Full) : blob_len_(blob_len), log_(mode) {}

  void create_level(std::int32_t level, std::size_t cells) { levels_[level].assign(cells * blob_len_, 0); }
  void drop_level(std::int32_t level) { levels_.erase(level); }
  bool has_level(std::int32_t level) const { return levels_.contains(level); }

  std::size_t cells(std::int32_t level) const { return storage(level).size() / blob_len_; }
  std::size_t blob_len() const { return blob_len_; }

  std::span<const std::uint8_t> read_cell(std::int32_t level, std::uint64_t idx) {
    auto& s = storage(level);
    check(s, idx);
    log_.record(level, idx, TouchKind::Read);
    return {s.data() + idx * blob_len_, blob_len_};
  }

  void write_cell(std::int32_t level, std::uint64_t idx, std::span<const std::uint8_t> blob) {
    auto& s = storage(level);
    check(s, idx);
    if (blob.size() != blob_len_) throw ParameterError("blob length mismatch");
    log_.record(level, idx, TouchKind::Write);
    std::memcpy(s.data() + idx * blob_len_, blob.data(), blob_len_);
  }

  /// Writable view of a cell, logged as a write.
  std::span<std::uint8_t> write_span(std::int32_t level, std::uint64_t idx) {
    auto& s = storage(level);
    check(s, idx);
    log_.record(level, idx, TouchKind::Write);
    return {s.data() + idx * blob_len_, blob_len_};
  }

  void note(std::int32_t region, std::uint64_t idx, TouchKind kind) { log_.record(region, idx, kind); }

  TouchLog& log() { return log_; }
  const TouchLog& log() const { return log_; }

 private:
  std::vector<std::uint8_t>& storage(std::int32_t level) {
    auto it = levels_.find(level);
    if (it == levels_.end()) throw OutOfRange("no such level: " + std::to_string(level));
    return it->second;
  }
  const std::vector<std::uint8_t>& storage(std::int32_t level) const {
    auto it = levels_.find(level);
    if (it == levels_.end()) throw OutOfRange("no such level: " + std::to_string(level));
    return it->second;
  }
  void check(const std::vector<std::uint8_t>& s, std::uint64_t idx) const {
    if (idx >= s.size() / blob_len_) throw OutOfRange("cell index out of range");
  }

  std::size_t blob_len_;
  std::map<std::int32_t, std::vector<std::uint8_t>> levels_;
  TouchLog log_;
};

/// Writes `<seq> <level> <idx> <R|W>` lines. Needs a Full-mode log.
inline void export_trace(std::ostream& os, const TouchLog& log) {
  if (log.mode() != TraceMode::Full) throw ParameterError("trace export needs a full log");
  std::uint64_t seq = 0;
  for (const auto& t : log.entries()) os << seq++ << ' ' << t.region << ' ' << t.index << ' ' << touch_letter(t.kind) << '\n';
}

inline std::string export_trace(const TouchLog& log) {
  std::ostringstream os;
  export_trace(os, log);
  return os.str();
}

inline std::vector<TraceRecord> parse_trace(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceRecord r;
    char k = 0;
    if (!(ls >> r.seq >> r.level >> r.index >> k) || (k != 'R' && k != 'W'))
      throw ParameterError("bad trace line " + std::to_string(lineno));
    r.kind = k == 'R' ? TouchKind::Read : TouchKind::Write;
    out.push_back(r);
  }
  return out;
}

inline std::vector<TraceRecord> parse_trace(const std::string& text) {
  std::istringstream is(text);
  return parse_trace(is);
}

}  // namespace horam
